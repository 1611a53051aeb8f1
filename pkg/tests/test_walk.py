import math

import numpy as np
import pytest
import scipy.stats as sps

from maxstable import algorithm_s, cramer_root, make_stream
from maxstable.errors import NoRootError
from maxstable.walk import (
    sample_downcrossing,
    sample_upcrossing,
    sample_without_record_s,
)

THETA_HALF = 2.51286241725233935  # root of exp(theta/2) = 1 + theta (mpmath)
GAMMA = 0.5


@pytest.fixture(scope="module")
def tilt():
    return cramer_root(GAMMA)


def brute_walk_hits_zero(rng, x, gamma, barrier=-40.0):
    """Plain simulation: does the walk from x < 0 ever reach 0?

    Below the barrier the upcrossing probability is under exp(theta*barrier),
    about 1e-44, so stopping there is an exact-for-all-practical-purposes
    stand-in for an infinite horizon.
    """
    pos = x
    while barrier < pos < 0.0:
        pos += gamma - rng.standard_exponential()
    return pos >= 0.0


def test_cramer_root_residual(tilt):
    assert abs(math.exp(tilt.theta * GAMMA) - (1.0 + tilt.theta)) < 1e-12
    assert tilt.theta == pytest.approx(THETA_HALF, rel=1e-12)
    assert tilt.tilted_rate == pytest.approx(1.0 + THETA_HALF)
    drift = GAMMA - 1.0 / tilt.tilted_rate
    assert drift == pytest.approx(0.21533186295916154, rel=1e-10)
    assert drift > 0.0


def test_cramer_root_continuity():
    assert cramer_root(0.99).theta < 0.05
    assert cramer_root(0.9).theta < cramer_root(0.3).theta


def test_cramer_root_domain():
    for g in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(NoRootError):
            cramer_root(g)


def test_downcrossing_shape(backend):
    st = make_stream(2, 0, backend=backend)
    for _ in range(200):
        seg = sample_downcrossing(1.3, GAMMA, st)
        assert seg.s_values[-1] < 0.0
        assert np.all(seg.s_values[:-1] >= 0.0)
        assert seg.status == "downcrossing"
        # walk identity on the segment clock
        n = np.arange(1.0, len(seg) + 1.0)
        rebuilt = seg.start + GAMMA * n - seg.a_values
        assert np.abs(rebuilt - seg.s_values).max() < 1e-12
        assert np.all(np.diff(seg.a_values) > 0.0)


def test_downcrossing_first_step_probability(backend):
    # from 0: tau- = 1 iff the first arrival exceeds gamma, P = e^{-1/2}
    st = make_stream(3, 0, backend=backend)
    n = 10 ** 5
    hits = sum(len(sample_downcrossing(0.0, GAMMA, st)) == 1 for _ in range(n))
    assert abs(hits / n - math.exp(-0.5)) < 0.005


def test_downcrossing_mean_length_vs_brute(backend):
    st = make_stream(4, 0, backend=backend)
    n = 10 ** 4
    ours = np.array([len(sample_downcrossing(0.0, GAMMA, st)) for _ in range(n)])
    rng = np.random.default_rng(5)
    brute = np.empty(n)
    for i in range(n):
        pos, k = 0.0, 0
        while pos >= 0.0:
            pos += GAMMA - rng.standard_exponential()
            k += 1
        brute[i] = k
    se = np.hypot(ours.std() / math.sqrt(n), brute.std() / math.sqrt(n))
    assert abs(ours.mean() - brute.mean()) < 3.0 * se


def test_upcrossing_shape(tilt, backend):
    st = make_stream(6, 0, backend=backend)
    seen = 0
    while seen < 100:
        seg = sample_upcrossing(-0.3, tilt, st)
        if seg.status == "degenerate":
            assert len(seg) == 0
            continue
        seen += 1
        assert seg.s_values[-1] >= 0.0
        assert np.all(seg.s_values[:-1] < 0.0)


def test_upcrossing_acceptance_vs_brute(tilt, backend):
    st = make_stream(7, 0, backend=backend)
    n = 10 ** 5
    acc = sum(sample_upcrossing(-0.5, tilt, st).status != "degenerate"
              for _ in range(n))
    rng = np.random.default_rng(8)
    m = 10 ** 5
    hits = sum(brute_walk_hits_zero(rng, -0.5, GAMMA) for _ in range(m))
    p_ours, p_brute = acc / n, hits / m
    se = math.hypot(math.sqrt(p_ours * (1 - p_ours) / n),
                    math.sqrt(p_brute * (1 - p_brute) / m))
    assert abs(p_ours - p_brute) < 3.0 * se


def test_tilted_plain_consistency(tilt, backend):
    # law of (S_1..S_3) restricted to tau+ >= 3 agrees between plain paths
    # and tilted paths reweighted by exp(-theta (S_3 - x))
    x = -1.0
    rng = np.random.default_rng(9)
    n = 10 ** 5

    def h(s3):
        return 1.0 / (1.0 + s3 * s3)

    plain = np.zeros(n)
    for i in range(n):
        s = x + np.cumsum(GAMMA - rng.standard_exponential(3))
        if s[0] < 0.0 and s[1] < 0.0:
            plain[i] = h(s[2])
    tilted = np.zeros(n)
    for i in range(n):
        s = x + np.cumsum(GAMMA - rng.standard_exponential(3) / tilt.tilted_rate)
        if s[0] < 0.0 and s[1] < 0.0:
            tilted[i] = h(s[2]) * math.exp(-tilt.theta * (s[2] - x))
    se = np.hypot(plain.std() / math.sqrt(n), tilted.std() / math.sqrt(n))
    assert abs(plain.mean() - tilted.mean()) < 3.0 * se


def test_without_record_shape(tilt, backend):
    st = make_stream(10, 0, backend=backend)
    for _ in range(50):
        seg = sample_without_record_s(-0.7, 5, tilt, st)
        assert len(seg) == 5
        assert np.all(seg.s_values < 0.0)


def test_without_record_terminates_near_zero(tilt, backend):
    st = make_stream(11, 0, backend=backend)
    seg = sample_without_record_s(-0.01, 3, tilt, st)
    assert np.all(seg.s_values < 0.0)


def test_without_record_first_step_law(tilt, backend):
    # x = -5, ell = 1: the first conditioned step against brute-force
    # conditioning on never reaching 0
    x = -5.0
    st = make_stream(12, 0, backend=backend)
    n = 10 ** 4
    ours = np.array([sample_without_record_s(x, 1, tilt, st).s_values[0]
                     for _ in range(n)])
    rng = np.random.default_rng(13)
    brute = []
    while len(brute) < n:
        s1 = x + GAMMA - rng.standard_exponential()
        if s1 < 0.0 and not brute_walk_hits_zero(rng, s1, GAMMA):
            brute.append(s1)
    assert sps.ks_2samp(ours, np.array(brute)).pvalue > 0.01


def test_algorithm_s_guarantee(tilt, backend):
    st = make_stream(14, 0, backend=backend)
    for _ in range(200):
        seg, n_s = algorithm_s(7, tilt, st)
        path = seg.path
        assert len(path) == n_s + 8
        assert np.all(path[n_s + 1:] < 0.0)
        n = np.arange(1.0, len(seg) + 1.0)
        assert np.abs(GAMMA * n - seg.a_values - seg.s_values).max() < 1e-12
    seg, n_s = algorithm_s(0, tilt, st)
    assert len(seg.path) == n_s + 1


def test_algorithm_s_last_passage_law(tilt, backend):
    # N_S - 1 is the last index with S_n >= 0 (S_0 = 0 included), so the
    # brute force tracks the last nonnegative position before the barrier
    st = make_stream(15, 0, backend=backend)
    n = 10 ** 4
    ours = np.array([algorithm_s(0, tilt, st)[1] for _ in range(n)])
    rng = np.random.default_rng(16)
    brute = np.empty(n)
    for i in range(n):
        pos, k, last = 0.0, 0, 0
        while pos > -40.0:
            pos += GAMMA - rng.standard_exponential()
            k += 1
            if pos >= 0.0:
                last = k
        brute[i] = last + 1
    assert sps.ks_2samp(ours, brute).pvalue > 0.01


def test_pooled_arrival_increments(tilt, backend):
    # Wald: pooled increments of plain downcrossing segments across runs
    # follow Exp(1)
    st = make_stream(17, 0, backend=backend)
    incs = []
    for _ in range(2000):
        seg = sample_downcrossing(0.0, GAMMA, st)
        incs.append(np.diff(np.concatenate(([0.0], seg.a_values))))
    pooled = np.concatenate(incs)
    assert sps.kstest(pooled, "expon").pvalue > 0.01
