"""Record-breaking process for the Gaussian sequence (last record time N_X).

The n-th vector is a record when its sup norm exceeds a log n.  After a
burn-in of n0 plain draws, single records are proposed through a heavy
index K with explicit tail quantile, one exceedance-conditioned vector at
the proposed index, and a rejection test whose acceptance probability is
exactly P(T < infinity); a degenerate outcome therefore certifies that no
record ever occurs again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import special
from .errors import NonTerminationError
from .gaussian import GaussianDesign, density_ratio_p_over_pn, sample_exceedance

_ATTEMPT_CAP = 10 ** 7


@dataclass(frozen=True)
class RecordParams:
    """Record exponent a in (0,1), burn-in n0 and the design's sigma_bar."""

    a: float
    n0: int
    sigma_bar: float

    @classmethod
    def for_design(cls, design: GaussianDesign, a: float = 0.5) -> "RecordParams":
        if not 0.0 < a < 1.0:
            raise ValueError(f"record exponent a must lie in (0, 1), got {a}")
        return cls(a=a, n0=choose_n0(a, design.sigma_bar, design.d),
                   sigma_bar=design.sigma_bar)


@dataclass(frozen=True)
class RecordOutput:
    """Emitted vectors (rows), their sup norms, and the last record index."""

    x_rows: np.ndarray
    sup_norms: np.ndarray
    n_x: int


def _n0_bound(n0: int, a: float, sigma_bar: float, d: int) -> bool:
    c = sigma_bar / a
    lhs = d * special.norm_sf(a * math.log(n0) / sigma_bar - c)
    rhs = 0.5 * math.sqrt(math.pi / 2.0) * special.norm_pdf(c) / c
    return lhs <= rhs


def choose_n0(a: float, sigma_bar: float, d: int) -> int:
    """Smallest burn-in n0 >= 2 controlling the record tail mass."""
    if not 0.0 < a < 1.0:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if sigma_bar <= 0.0 or d < 1:
        raise ValueError("need sigma_bar > 0 and d >= 1")
    hi = 2
    while not _n0_bound(hi, a, sigma_bar, d):
        hi *= 2
    lo = max(2, hi // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if _n0_bound(mid, a, sigma_bar, d):
            hi = mid
        else:
            lo = mid + 1
    return hi


@lru_cache(maxsize=128)
def _proposal_denominator(n0: int, a: float, sigma_bar: float) -> float:
    # Integral of phi(a log(n0+s)/sigma_bar) over s in (0, inf); substituting
    # u = a log(n0+s)/sigma_bar reduces it to a Gaussian tail in closed form.
    c = sigma_bar / a
    v0 = a * math.log(n0) / sigma_bar
    return c * math.exp(0.5 * c * c) * special.norm_sf(v0 - c)


def g_n0_pmf(k: int, n0: int, a: float, sigma_bar: float) -> float:
    """Probability mass of the record-index proposal K at k >= 1.

    The numerator integrates phi(a log(n0+s)/sigma_bar) over (k-1, k) by
    adaptive quadrature: k can be astronomically large, so the evaluation
    must not iterate to k, and the closed form would cancel catastrophically.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scale = a / sigma_bar

    def integrand(s: float) -> float:
        return special.norm_pdf(scale * math.log(n0 + s))

    num = special.adaptive_simpson(integrand, float(k - 1), float(k), rel_tol=1e-10)
    return num / _proposal_denominator(n0, a, sigma_bar)


def sample_K(n0: int, a: float, sigma_bar: float, stream) -> int:
    """Draw the proposal index by inverse transform of its explicit tail."""
    c = sigma_bar / a
    v0 = a * math.log(n0) / sigma_bar
    u = stream.uniform()
    z = special.norm_isf(u * special.norm_sf(v0 - c))
    k = math.ceil(math.exp(c * c + c * z) - n0)
    return max(k, 1)


def sample_single_record(a: float, n0: int, n1: int, design: GaussianDesign, stream):
    """One-shot proposal for the next record segment after index n1 >= n0.

    Returns ``(rows, sups)`` for the accepted segment X_1..X_K (the last row
    is the record) or None.  Acceptance happens with probability exactly
    P(T_{n1} < infinity), so None certifies that no further record occurs.
    """
    if n1 < n0:
        raise ValueError(f"n1 must be >= n0 = {n0}, got {n1}")
    k = sample_K(n0, a, design.sigma_bar, stream)
    x, sup, bad = stream.record_scan(design.chol, n1, a, k - 1)
    if bad:
        return None
    threshold = a * math.log(n1 + k)
    cond = sample_exceedance(design, threshold, stream)
    u = stream.uniform()
    if u * g_n0_pmf(k, n0, a, design.sigma_bar) > density_ratio_p_over_pn(
            design, cond, threshold):
        return None
    rows = np.concatenate((x, cond.values[None, :]))
    sups = np.concatenate((sup, [cond.sup_norm]))
    return rows, sups


def sample_without_record_x(n1: int, ell: int, a: float, n0: int,
                            design: GaussianDesign, stream):
    """ell plain vectors conditioned on no record at indices n1+1..infinity.

    Rejection loop: redraw on any record among the ell candidates, then
    require a fresh single-record proposal at n1+ell to come back
    degenerate, certifying no record after the segment either.  The
    certification draw is discarded but its cost is counted.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    for _ in range(_ATTEMPT_CAP):
        x, sup, bad = stream.record_scan(design.chol, n1, a, ell)
        if bad:
            continue
        if sample_single_record(a, n0, n1 + ell, design, stream) is None:
            return x, sup
    raise NonTerminationError("sample_without_record_x exceeded attempt cap")


def algorithm_x(params: RecordParams, design: GaussianDesign, ell: int,
                stream) -> RecordOutput:
    """Sample X_1..X_{N_X + ell}: burn-in, records until degenerate, tail."""
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    x0, sup0 = stream.gaussian_rows_sup(design.chol, params.n0)
    rows, sups = [x0], [sup0]
    eta = params.n0
    while True:
        seg = sample_single_record(params.a, params.n0, eta, design, stream)
        if seg is None:
            break
        rows.append(seg[0])
        sups.append(seg[1])
        eta += len(seg[1])
    n_x = eta
    if ell > 0:
        x_tail, sup_tail = sample_without_record_x(eta, ell, params.a,
                                                   params.n0, design, stream)
        rows.append(x_tail)
        sups.append(sup_tail)
    return RecordOutput(x_rows=np.concatenate(rows),
                        sup_norms=np.concatenate(sups), n_x=n_x)
