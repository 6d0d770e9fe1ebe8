import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kernel_response.costmodel import (
    CostModelInput,
    check_recommendation,
    pilot_decay_rate,
    recommend_approximation,
    recommend_intrinsic,
)
from kernel_response.estimators import ErgodicConfig, ergodic_estimator
from kernel_response.experiments import rep_seed
from kernel_response.models import build_ar1, build_tent


def test_intrinsic_example():
    rec = recommend_intrinsic(0.1, 0.5, 0.1)
    assert (rec.W, rec.L) == (4, 40000)


def test_approximation_example():
    rec = recommend_approximation(0.1, 0.5, 1.0)
    assert rec.sigma == pytest.approx(0.05)
    assert (rec.W, rec.L) == (4, 160000)


def test_faster_decay_needs_shorter_window():
    Ws = [recommend_intrinsic(0.01, t, 0.1).W for t in (0.9, 0.7, 0.5, 0.3, 0.1)]
    assert Ws == sorted(Ws, reverse=True) and Ws[0] > Ws[-1]


def test_halving_eps_quadruples_samples_per_window():
    a, b = recommend_intrinsic(0.1, 0.5, 0.1), recommend_intrinsic(0.05, 0.5, 0.1)
    assert b.L / b.W == pytest.approx(4 * a.L / a.W, rel=1e-4)


def test_smaller_parameter_step_costs_quadratically():
    a, b = recommend_approximation(0.1, 0.5, 1.0), recommend_approximation(0.1, 0.5, 0.5)
    assert b.sigma < a.sigma
    assert b.L == pytest.approx(4 * a.L, rel=1e-4)


def test_slow_decay_blows_up_cost():
    Ls = [recommend_approximation(0.1, t, 1.0).L for t in (0.5, 0.9, 0.99, 0.999)]
    assert all(x < y for x, y in zip(Ls, Ls[1:]))
    assert Ls[-1] > 1e6 * Ls[0]


@given(st.floats(1e-4, 0.5), st.floats(0.5, 0.99), st.floats(0.01, 2.0))
def test_balance_rule(eps, theta, sigma):
    # the integer window can undershoot eps by up to a factor theta, so the rule holds for theta >= 1/2
    b = recommend_intrinsic(eps, theta, sigma).breakdown
    for term in (b["bias"], b["sampling"]):
        assert eps / 2 <= term <= eps * (1 + 1e-9)


@pytest.mark.parametrize("kwargs", [dict(eps=0.0, theta=0.5), dict(eps=0.1, theta=1.0),
                                    dict(eps=0.1, theta=0.0), dict(eps=0.1, theta=0.5, delta_gamma=-1.0),
                                    dict(eps=0.1, theta=0.5, sigma=0.0)])
def test_invalid_inputs(kwargs):
    with pytest.raises(ValueError):
        CostModelInput(**kwargs)


def test_pilot_decay_rate_of_ar1():
    theta = pilot_decay_rate(build_ar1(0.5, 0.0, 0.3), 0.0, n_steps=50_000, seed=1)
    assert theta == pytest.approx(0.5, abs=0.05)


def test_recommendation_meets_target_on_tent(caplog):
    eps = 0.1
    rec = recommend_intrinsic(eps, 0.5, 0.1)
    p = build_tent(3.0, rec.sigma)
    runs = [ergodic_estimator(p.system, p.noise, p.observable,
                              ErgodicConfig(W=rec.W, L=rec.L, gamma=3.0, seed=rep_seed(5, k))).dphi_avg
            for k in range(10)]
    with caplog.at_level("INFO"):
        assert check_recommendation(rec, eps, float(np.std(runs, ddof=1)))
    assert "repeated-run std" in caplog.text
