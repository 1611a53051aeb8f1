import math

import numpy as np
import pytest
import scipy.stats as sps

from maxstable import CovarianceSpec, build_design, make_stream
from maxstable.records import (
    RecordParams,
    _n0_bound,
    algorithm_x,
    choose_n0,
    g_n0_pmf,
    sample_K,
    sample_single_record,
    sample_without_record_x,
)

# small-burn-in configuration: record times are reachable by brute force
A_TEST = 0.85
D1 = build_design(CovarianceSpec.explicit([[1.0]]))
N0_TEST = choose_n0(A_TEST, 1.0, 1)  # = 18
BRUTE_CAP = 10 ** 5


class FixedUniform:
    """Stream stub feeding a prescribed uniform to sample_K."""

    def __init__(self, u):
        self.u = u
        self.n_unif = 0

    def uniform(self):
        self.n_unif += 1
        return self.u


def brute_record_time(rng, n1, a, cap=BRUTE_CAP):
    """First k with |Z_k| > a log(n1 + k); 0 stands for infinity.

    Records beyond the cap are out of reach (the threshold sits 7+ sigma
    out), so the cap stands in for infinity.
    """
    done = 0
    while done < cap:
        m = min(cap - done, 4096)
        z = np.abs(rng.standard_normal(m))
        thr = a * np.log(n1 + done + 1 + np.arange(m))
        hits = np.nonzero(z > thr)[0]
        if hits.size:
            return done + int(hits[0]) + 1
        done += m
    return 0


def test_choose_n0_boundary():
    n0 = choose_n0(0.5, 1.0, 3)
    assert _n0_bound(n0, 0.5, 1.0, 3)
    assert not _n0_bound(n0 - 1, 0.5, 1.0, 3)
    assert n0 >= 2


def test_choose_n0_monotone_in_d():
    assert choose_n0(0.5, 1.0, 10) >= choose_n0(0.5, 1.0, 3)


def test_choose_n0_decreases_toward_one():
    assert choose_n0(0.9, 1.0, 3) < choose_n0(0.3, 1.0, 3)


def test_g_pmf_normalizes():
    # K_max from the quantile formula at U = 0.001
    c = 1.0 / A_TEST
    v0 = A_TEST * math.log(N0_TEST)
    z = sps.norm.isf(0.001 * sps.norm.sf(v0 - c))
    k_max = max(1, math.ceil(math.exp(c * c + c * z) - N0_TEST))
    total = sum(g_n0_pmf(k, N0_TEST, A_TEST, 1.0) for k in range(1, k_max + 1))
    assert total >= 0.999
    assert total <= 1.0 + 1e-9


def test_g_pmf_positive_and_eventually_decreasing():
    n0 = choose_n0(0.5, 1.0, 3)
    for k in (1, 7, 1000, 10 ** 4, 10 ** 8):
        assert g_n0_pmf(k, n0, 0.5, 1.0) > 0.0
    assert g_n0_pmf(10 ** 4, n0, 0.5, 1.0) > g_n0_pmf(10 ** 5, n0, 0.5, 1.0)


def test_sample_K_matches_pmf(backend):
    st = make_stream(40, 0, backend=backend)
    n = 10 ** 5
    draws = np.array([sample_K(N0_TEST, A_TEST, 1.0, st) for _ in range(n)])
    assert draws.min() >= 1
    k_bins = 50
    expected = np.array([g_n0_pmf(k, N0_TEST, A_TEST, 1.0)
                         for k in range(1, k_bins + 1)])
    counts = np.bincount(np.minimum(draws, k_bins + 1), minlength=k_bins + 2)[1:]
    exp_counts = np.append(expected, 1.0 - expected.sum()) * n
    p = sps.chisquare(counts, exp_counts).pvalue
    assert p > 0.01


def test_sample_K_boundary():
    assert sample_K(N0_TEST, A_TEST, 1.0, FixedUniform(1.0 - 1e-13)) == 1
    big = sample_K(N0_TEST, A_TEST, 1.0, FixedUniform(1e-12))
    assert big > 10 ** 3


def test_single_record_accept_shape(backend):
    st = make_stream(41, 0, backend=backend)
    seen = 0
    while seen < 60:
        seg = sample_single_record(A_TEST, N0_TEST, N0_TEST, D1, st)
        if seg is None:
            continue
        seen += 1
        rows, sups = seg
        k = len(sups)
        assert sups[-1] > A_TEST * math.log(N0_TEST + k)
        thresholds = A_TEST * np.log(N0_TEST + np.arange(1.0, k))
        assert np.all(sups[:-1] <= thresholds)
        assert np.abs(np.abs(rows).max(axis=1) - sups).max() < 1e-12


def test_single_record_law_vs_brute(backend):
    # accepted-K law == brute-force record time conditioned on T < infinity
    st = make_stream(42, 0, backend=backend)
    n_trial = 10 ** 4
    ours = []
    for _ in range(n_trial):
        seg = sample_single_record(A_TEST, N0_TEST, N0_TEST, D1, st)
        if seg is not None:
            ours.append(len(seg[1]))
    rng = np.random.default_rng(43)
    brute = []
    for _ in range(n_trial):
        t = brute_record_time(rng, N0_TEST, A_TEST)
        if t:
            brute.append(t)
    ours, brute = np.array(ours), np.array(brute)

    # acceptance rate within 3 binomial standard errors
    p1, p2 = len(ours) / n_trial, len(brute) / n_trial
    se = math.hypot(math.sqrt(p1 * (1 - p1) / n_trial),
                    math.sqrt(p2 * (1 - p2) / n_trial))
    assert abs(p1 - p2) < 3.0 * se

    # binned chi-square on the conditional law
    edges = [1, 3, 6, 10, 15, 22, 32, 50, 80, 130, 10 ** 9]
    c1 = np.histogram(ours, bins=edges)[0]
    c2 = np.histogram(brute, bins=edges)[0]
    keep = (c1 + c2) >= 10
    table = np.vstack((c1[keep], c2[keep]))
    p = sps.chi2_contingency(table).pvalue
    assert p > 0.01


def test_without_record_shape(backend):
    st = make_stream(44, 0, backend=backend)
    for _ in range(30):
        x, sup = sample_without_record_x(N0_TEST, 6, A_TEST, N0_TEST, D1, st)
        thresholds = A_TEST * np.log(N0_TEST + np.arange(1.0, 7.0))
        assert np.all(sup < thresholds)


def test_without_record_far_tail_is_unconditional(backend):
    st = make_stream(45, 0, backend=backend)
    vals = np.array([
        sample_without_record_x(10 ** 4, 1, A_TEST, N0_TEST, D1, st)[0][0, 0]
        for _ in range(10 ** 4)])
    assert sps.kstest(vals, "norm").pvalue > 0.01


def test_without_record_small_n1_law(backend):
    # conditional law of the single retained vector is the truncated normal:
    # the certification event is independent of the candidate
    st = make_stream(46, 0, backend=backend)
    n = 6000
    ours = np.array([
        sample_without_record_x(N0_TEST, 1, A_TEST, N0_TEST, D1, st)[0][0, 0]
        for _ in range(n)])
    thr = A_TEST * math.log(N0_TEST + 1)
    rng = np.random.default_rng(47)
    brute = rng.standard_normal(8 * n)
    brute = brute[np.abs(brute) <= thr][:n]
    assert sps.ks_2samp(ours, brute).pvalue > 0.01


def test_algorithm_x_guarantee(backend):
    params = RecordParams(a=A_TEST, n0=N0_TEST, sigma_bar=1.0)
    st = make_stream(48, 0, backend=backend)
    for _ in range(100):
        out = algorithm_x(params, D1, 10, st)
        n_total = len(out.sup_norms)
        assert n_total == out.n_x + 10
        idx = np.arange(out.n_x + 1.0, n_total + 1.0)
        assert np.all(out.sup_norms[out.n_x:] <= A_TEST * np.log(idx))
        assert np.abs(np.abs(out.x_rows).max(axis=1) - out.sup_norms).max() < 1e-12


def test_algorithm_x_last_record_law(backend):
    params = RecordParams(a=A_TEST, n0=N0_TEST, sigma_bar=1.0)
    st = make_stream(49, 0, backend=backend)
    n = 5000
    ours = np.array([algorithm_x(params, D1, 0, st).n_x for _ in range(n)])
    rng = np.random.default_rng(50)
    horizon = 10 ** 4  # records past here are 7+ sigma out
    thr = A_TEST * np.log(np.arange(N0_TEST + 1.0, horizon + 1.0))
    brute = np.empty(n)
    for i in range(n):
        z = np.abs(rng.standard_normal(horizon - N0_TEST))
        hits = np.nonzero(z > thr)[0]
        brute[i] = N0_TEST + 1 + hits[-1] if hits.size else N0_TEST
    edges = [N0_TEST - 0.5, N0_TEST + 0.5, 25, 35, 50, 80, 130, 10 ** 9]
    c1 = np.histogram(ours, bins=edges)[0]
    c2 = np.histogram(brute, bins=edges)[0]
    keep = (c1 + c2) >= 10
    p = sps.chi2_contingency(np.vstack((c1[keep], c2[keep]))).pvalue
    assert p > 0.01


def test_algorithm_x_burn_in_is_unconditional(backend):
    params = RecordParams(a=A_TEST, n0=N0_TEST, sigma_bar=1.0)
    st = make_stream(51, 0, backend=backend)
    pooled = np.concatenate([algorithm_x(params, D1, 0, st).x_rows[:N0_TEST, 0]
                             for _ in range(500)])
    assert sps.kstest(pooled, "norm").pvalue > 0.01


def test_composition_keeps_guarantee(backend):
    params = RecordParams(a=A_TEST, n0=N0_TEST, sigma_bar=1.0)
    st = make_stream(52, 0, backend=backend)
    for _ in range(30):
        out = algorithm_x(params, D1, 15, st)
        n1 = out.n_x + 15
        x2, sup2 = sample_without_record_x(n1, 10, A_TEST, N0_TEST, D1, st)
        idx = np.arange(n1 + 1.0, n1 + 11.0)
        assert np.all(sup2 < A_TEST * np.log(idx))


def test_record_params_factory(brownian3):
    p = RecordParams.for_design(brownian3, a=0.5)
    assert p.n0 == choose_n0(0.5, 1.0, 3)
    assert p.sigma_bar == 1.0
    with pytest.raises(ValueError):
        RecordParams.for_design(brownian3, a=1.2)
