"""Budgeted estimation campaigns with CLT confidence intervals, KDE baseline.

A campaign runs i.i.d. estimator replications until the computational
budget is exhausted; B(b) is the number of complete replications whose
cumulative cost stays within b.  Replication i is a pure function of
(master seed, i), so campaigns are bit-reproducible for any worker count:
workers only decide which indices they compute, the reduction is always in
index order.
"""

from __future__ import annotations

import concurrent.futures
import math
import os
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import EmptyBudgetError, SingularCovarianceError
from .estimator import (
    DEFAULT_SCHEDULE,
    KernelConstants,
    draw_estimator,
)
from .gaussian import GaussianDesign
from .records import RecordParams
from .sampler import algorithm_m
from .streams import make_stream
from .walk import cramer_root

_KDE_CHUNK = 1 << 16


@dataclass(frozen=True)
class ModelBundle:
    """Everything a replication needs besides its stream.

    ``consts`` is None for d < 3, where only sampling (not density
    estimation) is available.
    """

    design: GaussianDesign
    params: RecordParams
    tilt: object
    consts: KernelConstants | None

    @classmethod
    def build(cls, design: GaussianDesign, a: float = 0.5,
              gamma: float = 0.5) -> "ModelBundle":
        consts = (KernelConstants.for_dimension(design.d)
                  if design.d >= 3 else None)
        return cls(design=design, params=RecordParams.for_design(design, a),
                   tilt=cramer_root(gamma), consts=consts)


@dataclass(frozen=True)
class EstimateReport:
    """Per-point campaign result."""

    point: tuple
    f_hat: float
    s_hat: float
    b: float
    b_count: int
    ci_lo: float
    ci_hi: float
    alpha: float
    rate: float


def rate_factor(b: float) -> float:
    """a(b) = sqrt(logloglog(b)/b); raises for budgets at or below e^e."""
    return special.triple_log_rate(b)


def _draw_batch(bundle: ModelBundle, points, seed: int, start: int, count: int,
                budget: float, c_min: int, budget_unit: str, backend):
    out = []
    for i in range(start, start + count):
        stream = make_stream(seed, i, backend=backend)
        cap = max(int(budget) - i * c_min, 0)
        if budget_unit == "draws":
            draw = draw_estimator(points, bundle.design, bundle.params,
                                  bundle.tilt, bundle.consts, DEFAULT_SCHEDULE,
                                  stream, max_levels=cap)
            cost = draw.level
        else:
            draw = draw_estimator(points, bundle.design, bundle.params,
                                  bundle.tilt, bundle.consts, DEFAULT_SCHEDULE,
                                  stream, max_cost=cap)
            cost = draw.cost
        out.append((draw.values, cost, draw.aborted))
        if draw.aborted:
            break
    return out


def _collect_draws(bundle: ModelBundle, points, budget: float, seed: int,
                   budget_unit: str, workers: int, backend):
    """Values and costs of the retained replications, in index order.

    The cap handed to replication i is budget - (i-1) * c_min, a bound no
    retained draw can exceed whatever the earlier costs were; this keeps
    mid-draw aborts deterministic even when draws are computed out of order
    by a worker pool.
    """
    c_min = 1 if budget_unit == "draws" else 2

    values, costs = [], []
    spent = 0
    stop = False
    if workers <= 1:
        i = 0
        while not stop:
            batch = _draw_batch(bundle, points, seed, i, 64, budget, c_min,
                                budget_unit, backend)
            for vals, cost, aborted in batch:
                if aborted or spent + cost > budget:
                    stop = True
                    break
                values.append(vals)
                costs.append(cost)
                spent += cost
            i += len(batch)
    else:
        chunk = 32
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            start = 0
            while not stop:
                futs = [pool.submit(_draw_batch, bundle, points, seed,
                                    start + j * chunk, chunk, budget, c_min,
                                    budget_unit, backend)
                        for j in range(workers)]
                for fut in futs:  # submission order == index order
                    for vals, cost, aborted in fut.result():
                        if stop or aborted or spent + cost > budget:
                            stop = True
                            break
                        values.append(vals)
                        costs.append(cost)
                        spent += cost
                start += workers * chunk
    return values, costs


def run_budget(points, design: GaussianDesign, budget: float, alpha: float,
               seed: int, a: float = 0.5, gamma: float = 0.5,
               budget_unit: str = "draws", workers: int = 1,
               backend: str | None = None) -> list[EstimateReport]:
    """Estimate the density at each point within a computational budget.

    budget_unit "draws" counts algorithm-M invocations (the paper's
    E(rho) = 1 convention); "elementary" counts raw elementary variables.
    The interval is f_hat +- z_{alpha/2} s_hat sqrt(a(b)): the printed CI
    construction, which reproduces the reference table half-widths and the
    desk-scale coverage requirement (the module invariant's plain-a(b)
    interval undercovers at any feasible budget; see README).
    """
    if budget_unit not in ("draws", "elementary"):
        raise ValueError(f"unknown budget unit {budget_unit!r}")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    bundle = ModelBundle.build(design, a=a, gamma=gamma)
    rate = rate_factor(budget)
    z = special.norm_isf(alpha / 2.0)

    values, costs = _collect_draws(bundle, pts, budget, seed, budget_unit,
                                   workers, backend)
    if not values:
        raise EmptyBudgetError(f"budget {budget} cannot afford one replication")
    v = np.asarray(values)  # (B, n_points)
    b_count = v.shape[0]
    f_hat = v.mean(axis=0)
    s_hat = np.sqrt(((v - f_hat) ** 2).mean(axis=0))  # 1/B divisor, as printed
    half = z * s_hat * math.sqrt(rate)
    return [
        EstimateReport(point=tuple(float(v) for v in pts[j]), f_hat=float(f_hat[j]),
                       s_hat=float(s_hat[j]), b=budget, b_count=b_count,
                       ci_lo=float(f_hat[j] - half[j]),
                       ci_hi=float(f_hat[j] + half[j]),
                       alpha=alpha, rate=rate)
        for j in range(pts.shape[0])
    ]


def sample_max_stable(design: GaussianDesign, n: int, seed: int,
                      a: float = 0.5, gamma: float = 0.5,
                      workers: int = 1, backend: str | None = None,
                      keep_paths: bool = False):
    """n independent exact draws of M, one stream per draw index."""
    bundle = ModelBundle.build(design, a=a, gamma=gamma)

    def one(i):
        stream = make_stream(seed, i, backend=backend)
        return algorithm_m(design, bundle.params, bundle.tilt, stream,
                           keep_paths=keep_paths)

    if workers <= 1:
        return [one(i) for i in range(n)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sample_one,
                             ((design, bundle, seed, i, backend, keep_paths)
                              for i in range(n)),
                             chunksize=max(1, n // (8 * workers))))


def _sample_one(args):
    design, bundle, seed, i, backend, keep_paths = args
    stream = make_stream(seed, i, backend=backend)
    return algorithm_m(design, bundle.params, bundle.tilt, stream,
                       keep_paths=keep_paths)


def _inv_sqrt_spd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    if w.min() <= 0.0:
        raise SingularCovarianceError("kernel scale matrix is singular")
    return (v / np.sqrt(w)) @ v.T


def _kde_values(samples: np.ndarray, x) -> np.ndarray:
    """Per-sample kernel contributions; the KDE is their plain mean."""
    samples = np.asarray(samples, dtype=np.float64)
    b = samples.shape[0]
    if b < 2:
        raise SingularCovarianceError("need at least two samples")
    x = np.asarray(x, dtype=np.float64)
    d = samples.shape[1]
    cov = np.cov(samples, rowvar=False)
    det = float(np.linalg.det(cov))
    if not math.isfinite(det) or det <= 0.0:
        raise SingularCovarianceError("sample covariance is singular")
    a_mat = cov / det ** (1.0 / d)
    a_inv_sqrt = _inv_sqrt_spd(a_mat)
    h = b ** (-1.0 / (2.0 * d + 1.0))
    norm = (2.0 * math.pi) ** (-0.5 * d) / h ** d
    out = np.empty(b)
    for lo in range(0, b, _KDE_CHUNK):
        z = (x - samples[lo:lo + _KDE_CHUNK]) @ a_inv_sqrt.T / h
        out[lo:lo + _KDE_CHUNK] = norm * np.exp(-0.5 * (z * z).sum(axis=1))
    return out


def kde_estimate(samples: np.ndarray, x, b: int | None = None) -> float:
    """Plug-in KDE with bandwidth b^(-1/(2d+1)) and sphered kernel shape.

    The kernel shape is the sample covariance scaled to unit determinant
    (A = Sigma-hat / det(Sigma-hat)^(1/d)); with that normalization the
    plain Gaussian-kernel sum is a proper density estimate.  Dividing by
    the bare determinant instead, as the reference displays it, inflates
    the estimate by det(Sigma-hat)^((d-1)/2) and cannot reproduce the
    reference's own table; see the README erratum note.
    """
    values = _kde_values(samples, x)
    if b is not None and b != values.size:
        raise ValueError(f"b = {b} does not match sample count {values.size}")
    return float(values.mean())


def kde_report(samples: np.ndarray, x, alpha: float = 0.05,
               n_batches: int = 100):
    """KDE value with a batch-means confidence interval (baseline only)."""
    values = _kde_values(samples, x)
    value = float(values.mean())
    edges = np.linspace(0, values.size, n_batches + 1).astype(int)
    batch = np.array([values[lo:hi].mean()
                      for lo, hi in zip(edges[:-1], edges[1:])])
    z = special.norm_isf(alpha / 2.0)
    half = z * float(batch.std(ddof=1)) / math.sqrt(n_batches)
    return value, value - half, value + half
