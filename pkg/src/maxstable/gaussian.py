"""Finite-dimensional Gaussian design and its sampling primitives.

The design holds the grid covariance, its Cholesky factor and the derived
per-location scales.  The inverse covariance is never materialized; every
use goes through triangular solves against the factor, which keeps
near-singular Brownian grids stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import special
from .errors import (
    BadGridError,
    DimensionMismatchError,
    NoExceedanceError,
    NonPositiveDefiniteError,
    ThresholdNonPositiveError,
)


@dataclass(frozen=True)
class CovarianceSpec:
    """Input covariance description: a Brownian grid or an explicit matrix."""

    kind: str  # "brownian" or "explicit"
    grid: np.ndarray | None = None
    matrix: np.ndarray | None = None
    mean: np.ndarray | None = None

    @classmethod
    def brownian(cls, grid, mean=None) -> "CovarianceSpec":
        return cls(kind="brownian", grid=np.asarray(grid, dtype=np.float64),
                   mean=None if mean is None else np.asarray(mean, dtype=np.float64))

    @classmethod
    def explicit(cls, matrix, mean=None) -> "CovarianceSpec":
        return cls(kind="explicit", matrix=np.asarray(matrix, dtype=np.float64),
                   mean=None if mean is None else np.asarray(mean, dtype=np.float64))


@dataclass(frozen=True)
class GaussianDesign:
    """Validated design: covariance, factor, scales and drift."""

    d: int
    sigma: np.ndarray
    chol: np.ndarray
    sigma_diag: np.ndarray
    sigma_bar: float
    mu: np.ndarray


@dataclass(frozen=True)
class GaussianVector:
    """One realization with its cached sup norm."""

    values: np.ndarray
    sup_norm: float = field(default=None)

    def __post_init__(self):
        if self.sup_norm is None:
            object.__setattr__(self, "sup_norm", float(np.abs(self.values).max()))


def build_design(spec: CovarianceSpec) -> GaussianDesign:
    """Build and validate a design from its covariance spec."""
    if spec.kind == "brownian":
        t = spec.grid
        if t is None or t.ndim != 1 or t.size == 0:
            raise BadGridError("brownian spec requires a 1-d grid")
        if not (np.all(t > 0.0) and np.all(np.diff(t) > 0.0)):
            raise BadGridError("grid points must be strictly increasing and positive")
        sigma = np.minimum.outer(t, t)
    elif spec.kind == "explicit":
        sigma = spec.matrix
        if sigma is None or sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise NonPositiveDefiniteError("explicit spec requires a square matrix")
        if not np.allclose(sigma, sigma.T, rtol=1e-12, atol=0.0):
            raise NonPositiveDefiniteError("covariance matrix is not symmetric")
        sigma = 0.5 * (sigma + sigma.T)
    else:
        raise ValueError(f"unknown covariance kind {spec.kind!r}")

    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefiniteError("covariance is not positive definite") from exc

    d = sigma.shape[0]
    mu = np.zeros(d) if spec.mean is None else np.asarray(spec.mean, dtype=np.float64)
    if mu.shape != (d,):
        raise DimensionMismatchError(f"mean has shape {mu.shape}, expected ({d},)")
    sigma_diag = np.sqrt(np.diag(sigma))
    return GaussianDesign(
        d=d,
        sigma=np.ascontiguousarray(sigma),
        chol=np.ascontiguousarray(chol),
        sigma_diag=sigma_diag,
        sigma_bar=float(sigma_diag.max()),
        mu=mu,
    )


def sample_gaussian(design: GaussianDesign, stream) -> GaussianVector:
    """One centered draw X = chol z; the drift enters only at max assembly."""
    x = stream.gaussian_rows(design.chol, 1)[0]
    return GaussianVector(values=x)


def precision_apply(design: GaussianDesign, v: np.ndarray) -> np.ndarray:
    """Sigma^{-1} v through the two triangular solves of the factor."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (design.d,):
        raise DimensionMismatchError(f"vector has shape {v.shape}, expected ({design.d},)")
    y = np.linalg.solve(design.chol, v)
    return np.linalg.solve(design.chol.T, y)


def exceedance_weights(design: GaussianDesign, threshold: float) -> np.ndarray:
    """Per-location two-sided tail masses P(|X(t_i)| > c)."""
    return np.array([2.0 * special.norm_sf(threshold / s) for s in design.sigma_diag])


def sample_exceedance(design: GaussianDesign, threshold: float, stream) -> GaussianVector:
    """Draw X from the mixture measure P^(n) used by the record proposals.

    Recipe: pick a location nu with probability proportional to its tail
    mass, force |X(t_nu)| above the threshold by inverse transform on the
    conditional tail, then fill the remaining coordinates with a fresh
    unconditional draw recentered around the regression on X(t_nu):
    Y - w(t) Y(t_nu) + w(t) X(t_nu) with w(t) = Cov(X(t), X(t_nu)) / Var(X(t_nu)).
    """
    if threshold <= 0.0:
        raise ThresholdNonPositiveError(f"threshold must be positive, got {threshold}")
    weights = exceedance_weights(design, threshold)
    total = weights.sum()
    u = stream.uniform() * total
    nu = int(np.searchsorted(np.cumsum(weights), u))
    nu = min(nu, design.d - 1)

    sig = design.sigma_diag[nu]
    j = stream.sign()
    u2 = stream.uniform()
    # |X(t_nu)|/sig is a standard normal conditioned above threshold/sig;
    # work with the survival function so deep tails keep full precision.
    tail = (1.0 - u2) * special.norm_sf(threshold / sig)
    val = sig * j * special.norm_isf(tail)

    y = stream.gaussian_rows(design.chol, 1)[0]
    w = design.sigma[:, nu] / design.sigma[nu, nu]
    out = y - w * y[nu] + w * val
    out[nu] = val  # exact, avoids cancellation noise at the pinned coordinate
    return GaussianVector(values=out)


def density_ratio_p_over_pn(design: GaussianDesign, x, threshold: float) -> float:
    """dP/dP^(n) at x: total tail mass over the exceedance count."""
    if threshold <= 0.0:
        raise ThresholdNonPositiveError(f"threshold must be positive, got {threshold}")
    values = x.values if isinstance(x, GaussianVector) else np.asarray(x, dtype=np.float64)
    count = int((np.abs(values) > threshold).sum())
    if count == 0:
        raise NoExceedanceError("no coordinate exceeds the threshold")
    return float(exceedance_weights(design, threshold).sum() / count)
