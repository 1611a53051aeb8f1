"""Normal special functions and the slowly varying sequences.

Every module draws its Phi / Phi-bar / phi / quantile evaluations and the
delta_n, g(n), a(b) sequences from here so there is a single audited
implementation.  The quantile is Acklam's rational approximation refined
by one Halley step against the erfc-based CDF, which brings the relative
error below 1e-12 on p in [1e-12, 1 - 1e-12].
"""

from __future__ import annotations

import math

from .errors import BudgetTooSmallError

E = math.e
EE = math.exp(math.e)  # e^e = 15.1542622...
SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)

# Acklam coefficients for the inverse normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / SQRT_2PI


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def norm_sf(x: float) -> float:
    """Upper tail Phi-bar(x) = 1 - Phi(x), accurate in the far tail."""
    return 0.5 * math.erfc(x / SQRT2)


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def norm_ppf(p: float) -> float:
    """Inverse of Phi.  Requires 0 < p < 1."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"norm_ppf requires p in (0, 1), got {p}")
    x = _acklam(p)
    # One Halley step; skipped in the ultra-deep tail where exp(x^2/2)
    # overflows (Acklam alone is ~1e-9 relative there).
    if abs(x) < 36.0:
        e = norm_cdf(x) - p
        u = e * SQRT_2PI * math.exp(0.5 * x * x)
        x -= u / (1.0 + 0.5 * x * u)
    return x


def norm_isf(q: float) -> float:
    """Inverse of the upper tail: norm_isf(q) solves Phi-bar(x) = q."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"norm_isf requires q in (0, 1), got {q}")
    return -norm_ppf(q)


def gamma_half_integer(k: int) -> float:
    """Gamma(k/2) for integer k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.gamma(0.5 * k)


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d: pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.pi ** (0.5 * d) / math.gamma(0.5 * d + 1.0)


# --- slowly varying sequences ------------------------------------------------

def delta_seq(n: int) -> float:
    """Perturbation size delta_n = 1 / logloglog(n + e^e)."""
    return 1.0 / math.log(math.log(math.log(n + EE)))


def g_tail(n: int) -> float:
    """Level tail g(n) = P(L >= n) = 1 / (n * log(n+e-1) * loglog(n+e^e-1))."""
    return 1.0 / (n * math.log(n + E - 1.0) * math.log(math.log(n + EE - 1.0)))


def triple_log_rate(b: float) -> float:
    """CLT rate factor a(b) = sqrt(logloglog(b) / b); needs b > e^e."""
    if b <= EE:
        raise BudgetTooSmallError(f"budget {b} must exceed e^e ~ {EE:.4f}")
    return math.sqrt(math.log(math.log(math.log(b))) / b)


# --- quadrature ---------------------------------------------------------------

def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-10,
                     max_depth: int = 50) -> float:
    """Adaptive Simpson integration of f on [a, b] to a relative tolerance."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    scale = abs(whole) if whole != 0.0 else 1.0

    def _rec(a, fa, b, fb, fm, whole, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * rel_tol * scale:
            return left + right + (left + right - whole) / 15.0
        return (_rec(a, fa, m, fm, flm, left, depth + 1)
                + _rec(m, fm, b, fb, frm, right, depth + 1))

    return _rec(a, fa, b, fb, fm, whole, 0)
