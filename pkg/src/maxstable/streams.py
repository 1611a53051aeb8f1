"""Random streams and the hot sampling primitives.

A stream bundles a seeded RNG with counters for every elementary random
variable the algorithms consume (one d-dimensional Gaussian vector, one
exponential and one uniform each count as one unit).  Two interchangeable
implementations exist:

* ``NumpyStream`` -- pure numpy, always available;
* ``maxstable._speedups.CompiledStream`` -- Cython + xoshiro256++ with an
  inline ziggurat, selected by default when the extension built.

Both implement the same primitive contracts and the same *semantic*
counting (early-exited scans count only what the algorithm actually
consumed), so cost accounting agrees across backends.  Streams for
parallel replications are derived from a master seed and a replication
index through ``numpy.random.SeedSequence`` spawn keys, which makes any
run reproducible independently of the worker count.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import NonTerminationError

try:
    from . import _speedups
except ImportError:  # extension not built; numpy fallback only
    _speedups = None

_WALK_STEP_CAP = 10 ** 9
_ATTEMPT_CAP = 10 ** 7
_SCAN_CHUNK = 1 << 20


def available_backends():
    return ("compiled", "numpy") if _speedups is not None else ("numpy",)


def default_backend() -> str:
    env = os.environ.get("MAXSTABLE_BACKEND")
    if env:
        if env not in ("compiled", "numpy"):
            raise ValueError(f"unknown backend {env!r}")
        if env == "compiled" and _speedups is None:
            raise ImportError("compiled backend requested but extension not built")
        return env
    return "compiled" if _speedups is not None else "numpy"


def make_stream(seed: int, index: int = 0, backend: str | None = None):
    """Stream for replication ``index`` of a run with master ``seed``."""
    if backend is None:
        backend = default_backend()
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    if backend == "numpy":
        return NumpyStream(ss)
    if backend == "compiled":
        if _speedups is None:
            raise ImportError("compiled backend requested but extension not built")
        state = ss.generate_state(4, dtype=np.uint64)
        if not state.any():
            state[0] = 0x9E3779B97F4A7C15
        return _speedups.CompiledStream(state)
    raise ValueError(f"unknown backend {backend!r}")


class NumpyStream:
    """numpy-based stream; the reference implementation of the primitives."""

    backend = "numpy"

    __slots__ = ("rng", "n_gauss", "n_exp", "n_unif")

    def __init__(self, seed_seq):
        self.rng = np.random.Generator(np.random.PCG64(seed_seq))
        self.n_gauss = 0
        self.n_exp = 0
        self.n_unif = 0

    @property
    def total_count(self) -> int:
        return self.n_gauss + self.n_exp + self.n_unif

    # -- raw draws ------------------------------------------------------

    def uniform(self) -> float:
        """One uniform on the open interval (0, 1)."""
        self.n_unif += 1
        u = self.rng.random()
        while u == 0.0:
            u = self.rng.random()
        return u

    def uniforms(self, n: int) -> np.ndarray:
        self.n_unif += n
        return self.rng.random(n)

    def sign(self) -> float:
        self.n_unif += 1
        return 1.0 if self.rng.random() < 0.5 else -1.0

    def exponentials(self, n: int) -> np.ndarray:
        self.n_exp += n
        return self.rng.standard_exponential(n)

    def gaussian_rows(self, chol: np.ndarray, n: int) -> np.ndarray:
        """n i.i.d. centered Gaussian vectors with covariance chol cholT."""
        self.n_gauss += n
        z = self.rng.standard_normal((n, chol.shape[0]))
        return z @ chol.T

    def gaussian_rows_sup(self, chol: np.ndarray, n: int):
        x = self.gaussian_rows(chol, n)
        return x, np.abs(x).max(axis=1)

    # -- record scanning ------------------------------------------------

    def record_scan(self, chol: np.ndarray, offset: int, a: float, count: int):
        """Draw up to ``count`` Gaussian vectors, stopping at the first record.

        Vector k (1-based) is a record when its sup norm exceeds
        a*log(offset + k).  Returns ``(x, sup, bad)`` with ``bad`` the index
        of the first record (0 if none); ``x``/``sup`` are only populated for
        ``bad == 0`` since callers discard rejected proposals.  The thresholds
        increase in k, so rows below a*log(offset+1) need no exact check.
        """
        if count == 0:
            d = chol.shape[0]
            return np.empty((0, d), dtype=np.float64), np.empty(0), 0
        xs, sups = [], []
        done = 0
        while done < count:
            m = min(count - done, _SCAN_CHUNK)
            x = self.rng.standard_normal((m, chol.shape[0])) @ chol.T
            sup = np.abs(x).max(axis=1)
            thr_lo = a * math.log(offset + done + 1)
            over = np.nonzero(sup > thr_lo)[0]
            for j in over:
                k = done + int(j) + 1
                if sup[j] > a * math.log(offset + k):
                    self.n_gauss += done + int(j) + 1
                    return None, None, k
            xs.append(x)
            sups.append(sup)
            done += m
        self.n_gauss += count
        if len(xs) == 1:
            return xs[0], sups[0], 0
        return np.concatenate(xs), np.concatenate(sups), 0

    # -- random walk segments -------------------------------------------

    def downcrossing(self, x: float, gamma: float) -> np.ndarray:
        """Walk S from x with increments gamma - Exp(1) until S < 0."""
        parts = []
        pos = x
        chunk = max(8, int(4.0 * (x + 1.0) / (1.0 - gamma)))
        steps = 0
        while True:
            e = self.rng.standard_exponential(chunk)
            s = pos + np.cumsum(gamma - e)
            neg = np.nonzero(s < 0.0)[0]
            if neg.size:
                j = int(neg[0])
                self.n_exp += j + 1
                parts.append(s[: j + 1])
                return np.concatenate(parts) if len(parts) > 1 else parts[0]
            self.n_exp += chunk
            parts.append(s)
            pos = s[-1]
            steps += chunk
            if steps > _WALK_STEP_CAP:
                raise NonTerminationError("downcrossing exceeded step cap")
            chunk = min(2 * chunk, 1 << 16)

    def upcrossing(self, x: float, gamma: float, theta: float):
        """Tilted proposal for the upcrossing segment plus its accept test.

        Under the tilted measure the arrival increments are Exp(1 + theta)
        and the walk has positive drift, so S >= 0 is hit almost surely.
        Returns ``(path, accepted)``; acceptance has probability
        exp(-theta * (S_end - x)), which makes accepted paths follow the
        plain law restricted to tau+ < infinity.

        The acceptance uniform is independent of the path and the test value
        is at most exp(theta x), so the uniform is drawn first and the path
        is only simulated when acceptance is still possible: same joint law,
        and certifications from deeply negative x cost one uniform.
        """
        u = self.uniform()
        if u > math.exp(theta * x):
            return None, False
        rate = 1.0 + theta
        drift = gamma - 1.0 / rate
        parts = []
        pos = x
        chunk = max(16, int(4.0 * (-x) / drift))
        steps = 0
        while True:
            e = self.rng.standard_exponential(chunk) / rate
            s = pos + np.cumsum(gamma - e)
            nonneg = np.nonzero(s >= 0.0)[0]
            if nonneg.size:
                j = int(nonneg[0])
                self.n_exp += j + 1
                parts.append(s[: j + 1])
                path = np.concatenate(parts) if len(parts) > 1 else parts[0]
                accepted = u <= math.exp(-theta * (path[-1] - x))
                return path, accepted
            self.n_exp += chunk
            parts.append(s)
            pos = s[-1]
            steps += chunk
            if steps > _WALK_STEP_CAP:
                raise NonTerminationError("upcrossing exceeded step cap")
            chunk = min(2 * chunk, 1 << 16)

    def walk_tail(self, x: float, gamma: float, theta: float, ell: int) -> np.ndarray:
        """ell plain steps from x conditioned on never reaching 0 again.

        Rejection: propose ell plain steps; reject on any S >= 0 (scan stops
        there) or when a fresh tilted upcrossing from S_ell is accepted,
        certifying tau+ < infinity after the segment.
        """
        for _ in range(_ATTEMPT_CAP):
            parts = []
            pos = x
            done = 0
            ok = True
            while done < ell:
                m = min(ell - done, _SCAN_CHUNK)
                e = self.rng.standard_exponential(m)
                s = pos + np.cumsum(gamma - e)
                nonneg = np.nonzero(s >= 0.0)[0]
                if nonneg.size:
                    self.n_exp += int(nonneg[0]) + 1
                    ok = False
                    break
                self.n_exp += m
                parts.append(s)
                pos = s[-1]
                done += m
            if not ok:
                continue
            path = np.concatenate(parts) if len(parts) > 1 else parts[0]
            _, upcrossed = self.upcrossing(path[-1], gamma, theta)
            if not upcrossed:
                return path
        raise NonTerminationError("walk_tail exceeded attempt cap")

    # -- assembly (pure compute, no randomness) --------------------------

    @staticmethod
    def assemble(x: np.ndarray, s_path: np.ndarray, gamma: float,
                 mu: np.ndarray):
        """Componentwise max of X_k - log A_k plus mu, and the column sum."""
        n = x.shape[0]
        log_a = np.log(gamma * np.arange(1.0, n + 1.0) - s_path[1 : n + 1])
        m = (x - log_a[:, None]).max(axis=0) + mu
        return m, x.sum(axis=0)
