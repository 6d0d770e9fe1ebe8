import io

import numpy as np
import pytest

from kernel_response.models import (
    J0,
    ar1_response,
    ar1_stationary_mean,
    ar1_stationary_variance,
    backprop_integrand,
    build_ar1,
    build_network,
    build_tent,
    jacobian_product_norms,
    load_j0,
)
from kernel_response.noise import DirectionalGaussian, IsotropicGaussian
from kernel_response.oracle import ensemble_endpoints


def test_tent_apex_wraps():
    p = build_tent(3.0, 0.1)
    assert p.system.wrap(p.system.f(3.0, np.array([[0.5]])))[0, 0] == pytest.approx(0.5)


def test_tent_parameter_derivative_examples():
    p = build_tent()
    np.testing.assert_array_equal(p.system.df(3.0, np.array([[0.3], [0.8]]))[:, 0], [0.3, 1.0 - 0.8])


def test_tent_warns_outside_branch_range():
    with pytest.warns(UserWarning):
        build_tent(4.5, 0.1)
    with pytest.raises(ValueError):
        build_tent(3.0, 0.0)


def test_j0_first_row():
    np.testing.assert_array_equal(J0[0], [-0.54, -1.19, -0.33, 1.66, -0.5, -1.3, 1.52, -0.5, 1.95])
    assert J0.shape == (9, 9)
    assert not J0.flags.writeable


def test_j0_round_trips_through_csv():
    buf = io.StringIO()
    np.savetxt(buf, J0, delimiter=",", fmt="%.17g")
    back = np.loadtxt(io.StringIO(buf.getvalue()), delimiter=",")
    assert np.array_equal(back, J0)
    assert np.array_equal(load_j0(), J0)


def test_network_map_at_origin():
    p = build_network(0.3, 1.5, "foliated", "chart")
    np.testing.assert_allclose(p.system.f(0.3, np.zeros((1, 9))), np.full((1, 9), 0.3))


def test_network_initial_score_example():
    p = build_network(0.0, 1.5, "foliated", "chart")
    assert p.init.score_gamma(0.0, np.ones((1, 9)))[0] == 9.0


def test_network_chart_observable():
    p = build_network(0.1, 1.5, "full", "chart")
    x = np.ones((2, 9))
    np.testing.assert_allclose(p.observable(x), 9 - 0.9)
    np.testing.assert_array_equal(p.observable.param_derivative(0.1, x), [-9.0, -9.0])


def test_network_noise_modes():
    fol = build_network(noise_mode="foliated").noise
    full = build_network(noise_mode="full").noise
    assert len(fol) == 50 and isinstance(fol[0], DirectionalGaussian)
    np.testing.assert_allclose(fol[0].direction, np.full(9, 1 / 3))
    assert type(full[0]) is IsotropicGaussian and full[0].dimension == 9
    assert build_network(noise_mode="none").noise is None
    with pytest.raises(ValueError):
        build_network(noise_mode="sideways")


def test_chart_and_original_forms_agree_without_noise():
    g = 0.15
    orig = build_network(g, noise_mode="none", form="original")
    chart = build_network(g, noise_mode="none", form="chart")
    a = ensemble_endpoints(orig, 50, g, 50, seed=3)
    b = ensemble_endpoints(chart, 50, g, 50, seed=3)
    # chart states are original states shifted by g*1, and the chart observable removes 9g
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-6)


def test_jacobian_products_are_heavy_tailed():
    norms = jacobian_product_norms(2000, seed=1)
    grad = backprop_integrand(2000, seed=1)
    print(f"50-layer Jacobian norm: median {np.median(norms):.2e}, max {norms.max():.2e}; "
          f"pathwise integrand std {grad.std():.2e}")
    assert norms.max() > 1e3
    assert grad.std() > 1e3


def test_backprop_integrand_matches_pathwise_finite_differences():
    n, h = 50, 1e-7
    grad = backprop_integrand(n, seed=4)
    rng = np.random.default_rng(4)  # same stream of initial states
    J = 4 * J0

    def run(x0, gamma):
        x = x0
        for _ in range(50):
            x = J @ np.tanh(x + gamma)
        return x.sum()

    for k in range(n):
        x0 = rng.standard_normal(9)
        fd = (run(x0, h) - run(x0, -h)) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-4, abs=1e-4)


def test_ar1_closed_forms():
    assert ar1_stationary_mean(0.5, 1.0) == 2.0
    assert ar1_response(0.5) == 2.0
    assert ar1_response(0.0) == 1.0
    assert ar1_response(0.5, 60) == pytest.approx(2 * (1 - 0.5**60))
    assert ar1_stationary_variance(0.5, 0.3) == pytest.approx(0.12)


def test_ar1_rejects_non_contracting():
    with pytest.raises(ValueError):
        build_ar1(1.0)
    with pytest.raises(ValueError):
        build_ar1(-1.2)
