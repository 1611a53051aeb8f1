"""Unbiased density estimator: perturbed potential kernels + level debiasing.

The raw functional W(x) = <M - x, sum_k Sigma^{-1} X_k> / (d w_d ||M-x||^d)
has infinite variance from the singularity at M = x.  Inflating the
denominator by delta_n ||M - x|| caps each level at ||S||/(d w_d delta_n)
but introduces bias, which the randomized level sum V(x) =
sum_{k<=L} Delta_k(x)/g(k) removes exactly: each level difference is
evaluated on its own independent exact sample, L has tail g, and
E V(x) = lim_n E W_n(x) = f(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .gaussian import GaussianDesign, precision_apply
from .sampler import ExactSample, algorithm_m


@dataclass(frozen=True)
class KernelConstants:
    """Dimension constants of the Newtonian potential (d >= 3)."""

    d: int
    omega_d: float
    kappa_d: float

    @classmethod
    def for_dimension(cls, d: int) -> "KernelConstants":
        if d < 3:
            raise ValueError(f"potential kernel needs d >= 3, got {d}")
        omega = special.unit_ball_volume(d)
        return cls(d=d, omega_d=omega, kappa_d=1.0 / (d * (2.0 - d) * omega))


class LevelSchedule:
    """The slowly varying level laws: delta_n and the tail g(n) = P(L >= n)."""

    @staticmethod
    def delta(n: int) -> float:
        if n == 0:
            return math.inf  # W-bar_0 = 0 by convention; never evaluated
        return special.delta_seq(n)

    @staticmethod
    def g(n: int) -> float:
        return special.g_tail(n)


DEFAULT_SCHEDULE = LevelSchedule()


@dataclass(frozen=True)
class EstimatorDraw:
    """One replication: V(x) per evaluation point, its level and cost.

    ``cost`` counts elementary variables, sum of the L exact-sample costs
    plus one for the level draw; ``level`` doubles as the cost in
    algorithm-M invocations.  ``values`` is None when the draw was aborted
    against a budget cap (such draws are discarded by the caller).
    """

    values: np.ndarray | None
    level: int
    cost: int

    @property
    def aborted(self) -> bool:
        return self.values is None


def potential_gradient(v: np.ndarray, consts: KernelConstants) -> np.ndarray:
    """Gradient of the Newtonian potential, G_i(v) = v_i / (d w_d ||v||^d)."""
    r = float(np.linalg.norm(v))
    return np.asarray(v) / (consts.d * consts.omega_d * r ** consts.d)


def score_sum(sample: ExactSample, design: GaussianDesign) -> np.ndarray:
    """Summed score factor Sigma^{-1} sum_{k<=N} X_k."""
    return precision_apply(design, sample.x_sum)


def w_bar(x, sample: ExactSample, n: int, consts: KernelConstants,
          schedule: LevelSchedule, design: GaussianDesign) -> float:
    """Level-n perturbed functional at the point x; 0 on the null set M = x."""
    r = sample.m - np.asarray(x, dtype=np.float64)
    nr = float(np.linalg.norm(r))
    if nr == 0.0:
        return 0.0
    s = score_sum(sample, design)
    denom = consts.d * consts.omega_d * (nr ** consts.d + schedule.delta(n) * nr)
    return float(r @ s) / denom


def delta_level(x, sample: ExactSample, n: int, consts: KernelConstants,
                schedule: LevelSchedule, design: GaussianDesign) -> float:
    """Within-sample level difference W-bar_n - W-bar_{n-1} (W-bar_0 = 0)."""
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    val = w_bar(x, sample, n, consts, schedule, design)
    if n > 1:
        val -= w_bar(x, sample, n - 1, consts, schedule, design)
    return val


def sample_level(schedule: LevelSchedule, stream) -> int:
    """Inverse transform on the monotone tail: largest n with g(n) >= U."""
    u = stream.uniform()
    if schedule.g(2) < u:
        return 1
    # exponential search for the first n with g(n) < u, then bisect
    lo, hi = 2, 4
    while schedule.g(hi) >= u:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if schedule.g(mid) >= u:
            lo = mid
        else:
            hi = mid
    return lo


def debias_weighted_sum(wbar_at, level: int, schedule: LevelSchedule) -> float:
    """sum_{k<=level} (wbar_at(k) - wbar_at(k-1)) / g(k) with wbar_at(0) = 0.

    The level-weighting logic in scalar form; used to validate the debiasing
    identity against sequences with known limits.
    """
    total = 0.0
    prev = 0.0
    for k in range(1, level + 1):
        cur = wbar_at(k)
        total += (cur - prev) / schedule.g(k)
        prev = cur
    return total


def draw_estimator(points, design: GaussianDesign, params, tilt,
                   consts: KernelConstants, schedule: LevelSchedule, stream,
                   max_levels: int | None = None,
                   max_cost: int | None = None) -> EstimatorDraw:
    """One i.i.d. replication of V(x) at every evaluation point.

    All points share the level L and the per-level exact samples; each
    level k uses an independent sample from algorithm M.  When a budget cap
    is passed and the draw provably cannot be retained, it aborts early and
    reports the partial cost.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    count0 = stream.total_count
    level = sample_level(schedule, stream)
    vals = np.zeros(pts.shape[0])
    dw = consts.d * consts.omega_d
    for k in range(1, level + 1):
        if max_levels is not None and k > max_levels:
            return EstimatorDraw(values=None, level=level,
                                 cost=stream.total_count - count0)
        if max_cost is not None and stream.total_count - count0 > max_cost:
            return EstimatorDraw(values=None, level=level,
                                 cost=stream.total_count - count0)
        smp = algorithm_m(design, params, tilt, stream)
        s = score_sum(smp, design)
        r = smp.m[None, :] - pts
        nr = np.sqrt((r * r).sum(axis=1))
        dots = r @ s
        with np.errstate(divide="ignore", invalid="ignore"):
            pow_nr = nr ** consts.d
            w_k = dots / (dw * (pow_nr + schedule.delta(k) * nr))
            if k > 1:
                w_k = w_k - dots / (dw * (pow_nr + schedule.delta(k - 1) * nr))
        w_k[nr == 0.0] = 0.0
        vals += w_k / schedule.g(k)
    return EstimatorDraw(values=vals, level=level,
                         cost=stream.total_count - count0)
