"""Negative-drift random walk S_n = gamma n - A_n and its last passage time.

A_n are unit-rate Poisson arrivals, so the increments are gamma - Exp(1)
and the walk drifts down for gamma < 1.  Upcrossing proposals run under an
exponential change of measure at the Cramer root theta (arrival increments
become Exp(1 + theta), giving positive drift) and are accepted with the
likelihood ratio exp(-theta (S_tau - x)), which detects tau+ = infinity
with probability one using finite work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoRootError


@dataclass(frozen=True)
class TiltParams:
    """Drift gamma, Cramer root theta and the tilted arrival rate 1 + theta."""

    gamma: float
    theta: float
    tilted_rate: float


@dataclass(frozen=True)
class WalkSegment:
    """A stretch of the walk, excluding its starting point.

    ``a_values`` are the arrival times on the segment's own clock,
    A_j = gamma j - (S_j - start), so the walk identity S_j = start +
    gamma j - A_j holds entrywise.  ``path`` prepends the starting point.
    """

    start: float
    s_values: np.ndarray
    a_values: np.ndarray
    status: str  # downcrossing | upcrossing | degenerate | plain

    @property
    def path(self) -> np.ndarray:
        return np.concatenate(([self.start], self.s_values))

    def __len__(self) -> int:
        return len(self.s_values)


def cramer_root(gamma: float) -> TiltParams:
    """Solve E exp(theta S_1) = 1, i.e. exp(theta gamma) = 1 + theta, theta > 0."""
    if not 0.0 < gamma < 1.0:
        raise NoRootError(f"gamma must lie in (0, 1), got {gamma}")
    # h(theta) = gamma theta - log1p(theta) is convex with h(0) = 0 and a
    # single positive root; bracket it by doubling past the minimum.
    lo = 1.0 / gamma - 1.0  # argmin of h, h(lo) < 0
    hi = max(2.0 * lo, 1.0)
    while gamma * hi - math.log1p(hi) < 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gamma * mid - math.log1p(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    theta = 0.5 * (lo + hi)
    for _ in range(3):  # Newton polish
        h = gamma * theta - math.log1p(theta)
        theta -= h / (gamma - 1.0 / (1.0 + theta))
    return TiltParams(gamma=gamma, theta=theta, tilted_rate=1.0 + theta)


def _segment(start: float, s: np.ndarray, gamma: float, status: str) -> WalkSegment:
    a = gamma * np.arange(1.0, len(s) + 1.0) - (s - start)
    return WalkSegment(start=start, s_values=s, a_values=a, status=status)


def sample_downcrossing(x: float, gamma: float, stream) -> WalkSegment:
    """Path S_1..S_tau- from x >= 0 under the plain measure."""
    if x < 0.0:
        raise ValueError(f"downcrossing starts at x >= 0, got {x}")
    s = stream.downcrossing(x, gamma)
    return _segment(x, s, gamma, "downcrossing")


def sample_upcrossing(x: float, tilt: TiltParams, stream) -> WalkSegment:
    """Path S_1..S_tau+ from x < 0, or degenerate when tau+ = infinity."""
    if x >= 0.0:
        raise ValueError(f"upcrossing starts at x < 0, got {x}")
    s, accepted = stream.upcrossing(x, tilt.gamma, tilt.theta)
    if not accepted:
        return WalkSegment(start=x, s_values=np.empty(0), a_values=np.empty(0),
                           status="degenerate")
    return _segment(x, s, tilt.gamma, "upcrossing")


def sample_without_record_s(x: float, ell: int, tilt: TiltParams, stream) -> WalkSegment:
    """ell steps from x < 0 conditioned on the walk never reaching 0 again."""
    if x >= 0.0:
        raise ValueError(f"conditioned tail starts at x < 0, got {x}")
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    s = stream.walk_tail(x, tilt.gamma, tilt.theta, ell)
    return _segment(x, s, tilt.gamma, "plain")


def algorithm_s(ell: int, tilt: TiltParams, stream):
    """Walk from 0 through its last nonnegative excursion, plus ell tail steps.

    Alternates downcrossing and upcrossing segments until an upcrossing is
    degenerate; the index of the last downcrossing entry is N_S, and every
    later step satisfies S_n < 0 (equivalently A_n > gamma n).  Returns the
    segment covering S_0..S_{N_S + ell} together with N_S.
    """
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    pieces = []
    pos = 0.0
    while True:
        down = stream.downcrossing(pos, tilt.gamma)
        pieces.append(down)
        pos = down[-1]
        up, accepted = stream.upcrossing(pos, tilt.gamma, tilt.theta)
        if not accepted:
            break
        pieces.append(up)
        pos = up[-1]
    s = np.concatenate(pieces) if len(pieces) > 1 else pieces[0]
    n_s = len(s)
    if ell > 0:
        tail = stream.walk_tail(s[-1], tilt.gamma, tilt.theta, ell)
        s = np.concatenate((s, tail))
    return _segment(0.0, s, tilt.gamma, "plain"), n_s
