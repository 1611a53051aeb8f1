"""Exact sampling of the max-stable vector M (record-breaker construction).

Combines the walk and record samplers: past N = max(N_A, N_X, N_a) no
index can contribute to the running maximum, so M = max_{k<=N}(-log A_k +
X_k + mu) over the finitely many retained terms is exact.  Whichever of
the two sequences stops short of N is extended with its conditioned
no-record sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonTerminationError
from .gaussian import GaussianDesign
from .records import RecordParams, algorithm_x, sample_without_record_x
from .walk import TiltParams, algorithm_s

_N_A_CAP = float(2 ** 62)


@dataclass(frozen=True)
class ExactSample:
    """One exact draw of M with its generating variables and cost.

    ``x_rows``, ``a_values`` and ``sup_norms`` are populated only when the
    sample is drawn with ``keep_paths=True``; the estimator path needs just
    ``m``, ``x_sum`` and ``cost``.  ``s_end`` is the terminal walk position,
    kept so a sample can be extended by further conditioned indices.
    """

    m: np.ndarray
    n: int
    n_a: int
    n_x: int
    n_walk: int
    cost: int
    x_sum: np.ndarray
    s_end: float
    x_rows: np.ndarray | None = None
    a_values: np.ndarray | None = None
    sup_norms: np.ndarray | None = None


def compute_n_a(a1: float, x1_supnorm: float, a: float, gamma: float) -> int:
    """Closed-form index past which n gamma >= A_1 n^a exp(||X_1||_inf).

    N_a = ceil(((A_1/gamma) exp(||X_1||))^(1/(1-a))), evaluated in logs so
    heavy draws cannot overflow silently.
    """
    log_na = (math.log(a1 / gamma) + x1_supnorm) / (1.0 - a)
    if log_na > math.log(_N_A_CAP):
        raise NonTerminationError(f"N_a overflow: log N_a = {log_na:.3g}")
    return max(1, math.ceil(math.exp(log_na)))


def algorithm_m(design: GaussianDesign, params: RecordParams, tilt: TiltParams,
                stream, keep_paths: bool = False) -> ExactSample:
    """Exact draw of (M, X_1..X_N, A_1..A_N, N) with full cost accounting."""
    count0 = stream.total_count

    walk_seg, n_walk = algorithm_s(0, tilt, stream)
    s_path = walk_seg.path
    rec = algorithm_x(params, design, 0, stream)

    a1 = tilt.gamma - s_path[1]
    n_a = compute_n_a(a1, float(rec.sup_norms[0]), params.a, tilt.gamma)
    n = max(n_walk, rec.n_x, n_a)

    if n > n_walk:
        tail = stream.walk_tail(s_path[-1], tilt.gamma, tilt.theta, n - n_walk)
        s_path = np.concatenate((s_path, tail))
    x_rows, sup_norms = rec.x_rows, rec.sup_norms
    if n > rec.n_x:
        x_tail, sup_tail = sample_without_record_x(
            rec.n_x, n - rec.n_x, params.a, params.n0, design, stream)
        x_rows = np.concatenate((x_rows, x_tail))
        sup_norms = np.concatenate((sup_norms, sup_tail))

    m, x_sum = stream.assemble(x_rows, s_path, tilt.gamma, design.mu)
    cost = stream.total_count - count0
    a_values = None
    if keep_paths:
        a_values = tilt.gamma * np.arange(1.0, n + 1.0) - s_path[1:]
    return ExactSample(
        m=m, n=n, n_a=n_a, n_x=rec.n_x, n_walk=n_walk, cost=cost,
        x_sum=x_sum, s_end=float(s_path[-1]),
        x_rows=x_rows if keep_paths else None,
        a_values=a_values,
        sup_norms=sup_norms if keep_paths else None,
    )


def cost_of(sample: ExactSample) -> int:
    """Elementary-variable count consumed to produce the sample."""
    return sample.cost


def extend_max(sample: ExactSample, extra: int, design: GaussianDesign,
               params: RecordParams, tilt: TiltParams, stream) -> np.ndarray:
    """Componentwise max after extending the sample by ``extra`` indices.

    The extension draws from the conditioned no-record laws, so by the
    truncation argument it can never change M; used as a correctness check.
    """
    tail = stream.walk_tail(sample.s_end, tilt.gamma, tilt.theta, extra)
    x_tail, _ = sample_without_record_x(sample.n, extra, params.a, params.n0,
                                        design, stream)
    k = np.arange(sample.n + 1.0, sample.n + extra + 1.0)
    log_a = np.log(tilt.gamma * k - tail)
    m_tail = (x_tail - log_a[:, None]).max(axis=0) + design.mu
    return np.maximum(sample.m, m_tail)
