import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernel_response.core import (
    Domain,
    InitialDistribution,
    NonFiniteError,
    Observable,
    SystemSpec,
    as_states,
    check_map_derivative,
    point_mass,
    step,
)
from kernel_response.models import build_ar1, build_network, build_tent


def test_tent_step_left_branch():
    sys = build_tent(3.0, 0.1).system
    assert step(sys, 3.0, 0, np.array([[0.2]]), 0.0)[0, 0] == pytest.approx(0.6, abs=1e-15)


def test_tent_step_right_branch():
    sys = build_tent(3.0, 0.1).system
    assert step(sys, 3.0, 0, np.array([[0.9]]), 0.0)[0, 0] == pytest.approx(0.3, abs=1e-15)


def test_ar1_step():
    sys = build_ar1(0.5, 1.0, 0.3).system
    assert step(sys, 1.0, 0, np.array([[2.0]]), np.array([[0.1]]))[0, 0] == pytest.approx(2.1, abs=1e-15)


def test_step_raises_with_step_index():
    sys = SystemSpec(1, lambda g, x: x * np.inf, lambda g, x: np.ones_like(x))
    with pytest.raises(NonFiniteError, match="step 4"):
        step(sys, 0.0, 3, np.array([[1.0]]), 0.0)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_torus_wrap_stays_in_unit_interval(values):
    sys = SystemSpec(1, lambda g, x: x, lambda g, x: x, Domain.TORUS)
    out = sys.wrap(np.array(values, dtype=float).reshape(-1, 1))
    assert np.all(out >= 0.0) and np.all(out < 1.0)


def test_wrap_tiny_negative_does_not_reach_one():
    sys = SystemSpec(1, lambda g, x: x, lambda g, x: x, Domain.TORUS)
    assert sys.wrap(np.array([[-1e-20]]))[0, 0] < 1.0


def test_tent_map_derivative_examples():
    sys = build_tent().system
    assert check_map_derivative(sys, 3.0, np.array([[0.2]])) < 1e-9
    np.testing.assert_allclose(sys.df(3.0, np.array([[0.3], [0.8]]))[:, 0], [0.3, 0.2])


@pytest.mark.parametrize("name", ["tent", "ar1", "network-chart", "network-original"])
def test_map_derivative_consistency_at_random_probes(name):
    rng = np.random.default_rng(11)
    if name == "tent":
        sys, gammas = build_tent().system, rng.uniform(2.5, 3.5, 20)
        xs = rng.random((20, 1, 1))
    elif name == "ar1":
        sys, gammas = build_ar1().system, rng.normal(size=20)
        xs = rng.normal(size=(20, 1, 1))
    else:
        sys = build_network(form=name.split("-")[1], noise_mode="none").system
        gammas = rng.uniform(-0.2, 0.2, 20)
        xs = 3 * rng.normal(size=(20, 1, 9))
    for g, x in zip(gammas, xs):
        n = int(rng.integers(0, sys.horizon)) if sys.horizon else 0
        assert check_map_derivative(sys, g, x, h=1e-6, n=n) < 1e-5


def test_network_chart_derivative_is_all_ones():
    sys = build_network(noise_mode="none").system
    x = np.random.default_rng(0).normal(size=(5, 9))
    assert np.array_equal(sys.df(0.1, x), np.ones((5, 9)))
    assert check_map_derivative(sys, 0.1, x) < 1e-8


def test_check_map_derivative_rejects_bad_step():
    with pytest.raises(ValueError):
        check_map_derivative(build_ar1().system, 0.0, [[0.0]], h=0.0)


def test_time_inhomogeneous_horizon_inferred():
    f = lambda g, x: x
    sys = SystemSpec(2, (f, f, f), (f, f, f))
    assert sys.horizon == 3 and not sys.time_homogeneous
    with pytest.raises(ValueError):
        SystemSpec(2, (f, f), (f,))
    with pytest.raises(ValueError):
        SystemSpec(2, (f, f), f)
    with pytest.raises(ValueError):
        SystemSpec(2, (f, f), (f, f), horizon=3)


def test_as_states_shapes():
    assert as_states(0.5, 1).shape == (1, 1)
    assert as_states([1.0, 2.0, 3.0], 3).shape == (1, 3)
    assert as_states([1.0, 2.0, 3.0], 1).shape == (3, 1)
    with pytest.raises(ValueError):
        as_states(np.zeros((2, 3)), 2)


def test_observable_returns_one_value_per_state():
    obs = Observable(lambda x: x.sum(axis=1))
    assert obs(np.ones((4, 3))).shape == (4,)


def test_initial_distribution_is_reproducible():
    init = InitialDistribution(lambda g, rng, n: rng.normal(size=(n, 2)) + g)
    a = init.sample(1.0, np.random.default_rng(5), 10)
    b = init.sample(1.0, np.random.default_rng(5), 10)
    assert np.array_equal(a, b)
    assert np.array_equal(point_mass([1.0, 2.0]).sample(0.0, None, 3), np.tile([1.0, 2.0], (3, 1)))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_trajectories_bitwise_reproducible(seed):
    p = build_tent(3.0, 0.1)

    def run():
        rng = np.random.default_rng(seed)
        x = p.init.sample(3.0, rng, 8)
        for n in range(20):
            x = step(p.system, 3.0, n, x, p.noise.sample(3.0, x, rng))
        return x

    assert np.array_equal(run(), run())
