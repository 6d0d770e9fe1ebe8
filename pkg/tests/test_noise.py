import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kernel_response.noise import (
    DirectionalGaussian,
    GeneralScore,
    IsotropicGaussian,
    NoiseSample,
    gaussian_as_general,
    score_terms,
)
from kernel_response.models import build_tent


def test_sample_std_converges():
    y = IsotropicGaussian(0.1, 1).sample_raw(np.random.default_rng(1), 10**6)
    assert abs(y.raw.std() / 0.1 - 1) < 0.01


def test_same_seed_same_samples():
    m = IsotropicGaussian(0.1, 3)
    a = m.sample_raw(np.random.default_rng(9), 100).raw
    b = m.sample_raw(np.random.default_rng(9), 100).raw
    assert np.array_equal(a, b)


def test_directional_samples_have_equal_components():
    m = DirectionalGaussian.uniform_diagonal(1.5, 9)
    y = m.sample(0.0, np.zeros((1000, 9)), np.random.default_rng(2))
    assert y.raw.shape == (1000, 1)
    assert np.allclose(y.embedded, y.embedded[:, :1], rtol=0, atol=1e-15)


def test_directional_never_excites_orthogonal_directions():
    d = np.array([3.0, 4.0, 0.0]) / 5.0
    m = DirectionalGaussian(0.7, d)
    e = m.sample(0.0, np.zeros((500, 3)), np.random.default_rng(3)).embedded
    residual = e - np.outer(e @ d, d)
    assert np.max(np.abs(residual)) < 1e-14


def test_small_sigma_samples_vanish():
    y = IsotropicGaussian(1e-12, 4).sample_raw(np.random.default_rng(0), 100)
    assert np.max(np.abs(y.embedded)) < 1e-10


def test_directional_requires_unit_vector():
    with pytest.raises(ValueError):
        DirectionalGaussian(1.0, [1.0, 1.0])


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        IsotropicGaussian(0.0)


def test_score_example():
    m = IsotropicGaussian(0.1, 1)
    y = NoiseSample(np.array([[0.05]]), np.array([[0.05]]))
    assert m.score(y)[0, 0] == pytest.approx(-5.0, rel=1e-14)


def test_score_vanishes_at_zero():
    for m in (IsotropicGaussian(0.3, 4), DirectionalGaussian.uniform_diagonal(0.3, 4)):
        y = m.sample(0.0, np.zeros((1, 4)), np.random.default_rng(0))
        zero = NoiseSample(np.zeros_like(y.raw), np.zeros_like(y.embedded))
        assert np.all(m.score(zero) == 0)


@pytest.mark.parametrize("model", [IsotropicGaussian(0.3, 2), DirectionalGaussian(0.4, [0.6, 0.8])])
def test_score_matches_finite_difference_of_log_density(model):
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(100):
        y = model.sample(0.0, np.zeros((1, 2)), rng)
        r = y.raw[0]
        fd = np.empty_like(r)
        for i in range(r.size):
            e = np.zeros_like(r)
            e[i] = h
            fd[i] = (model.log_density(r + e) - model.log_density(r - e)) / (2 * h)
        an = model.score(y)[0]
        assert np.max(np.abs(fd - an) / np.maximum(np.abs(an), 1.0)) < 1e-6


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.floats(0.01, 10))
def test_score_is_exactly_linear(raw, sigma):
    m = IsotropicGaussian(sigma, 3)
    raw = np.array([raw])
    assert np.array_equal(m.score(NoiseSample(raw, raw)), -raw / sigma**2)


def test_directional_contribution_example():
    sigma, xi = 0.5, 0.37
    m = DirectionalGaussian.uniform_diagonal(sigma, 9)
    y = NoiseSample(np.array([[xi]]), xi * m.direction[None, :])
    assert m.score_contribution(np.ones((1, 9)), y)[0] == pytest.approx(-3 * xi / sigma**2, rel=1e-12)


def test_orthogonal_perturbation_contributes_nothing():
    m = DirectionalGaussian.uniform_diagonal(1.0, 9)
    df = np.zeros((1, 9))
    df[0, 0], df[0, 1] = 1.0, -1.0
    y = m.sample(0.0, df, np.random.default_rng(0))
    assert m.score_contribution(df, y)[0] == 0.0


def test_second_moment_equivalence_of_foliated_and_full():
    n, M, sigma = 10**5, 9, 0.5
    ones = np.ones((n, M))
    rng = np.random.default_rng(6)
    full, fol = IsotropicGaussian(sigma, M), DirectionalGaussian.uniform_diagonal(sigma, M)
    e_full = np.mean(full.score_contribution(ones, full.sample(0.0, ones, rng)) ** 2)
    e_fol = np.mean(fol.score_contribution(ones, fol.sample(0.0, ones, rng)) ** 2)
    assert abs(e_fol / e_full - 1) < 0.05
    assert abs(e_full / (M / sigma**2) - 1) < 0.05


def test_dimension_mismatch_raises():
    m = IsotropicGaussian(1.0, 3)
    y = m.sample_raw(np.random.default_rng(0), 2)
    with pytest.raises(ValueError):
        m.score_contribution(np.ones((2, 2)), y)
    d = DirectionalGaussian.uniform_diagonal(1.0, 3)
    with pytest.raises(ValueError):
        d.score_contribution(np.ones((2, 4)), d.sample(0.0, np.ones((2, 3)), np.random.default_rng(0)))


@pytest.mark.parametrize("model", [IsotropicGaussian(0.2, 3), DirectionalGaussian.uniform_diagonal(0.2, 3)])
def test_free_centralization(model):
    L = 10**5
    rng = np.random.default_rng(12)
    df = rng.normal(size=(L, 3))
    i = model.score_contribution(df, model.sample(0.0, df, rng))
    assert abs(i.mean()) <= 3 * i.std() / np.sqrt(L)


def test_general_score_wrapper_reproduces_gaussian_terms():
    p = build_tent(3.0, 0.1)
    wrapped = gaussian_as_general(p.noise, p.system.map_derivative)
    x = np.random.default_rng(0).random((50, 1))
    y = p.noise.sample(3.0, x, np.random.default_rng(1))
    np.testing.assert_allclose(score_terms(wrapped, p.system, 3.0, x, 0, y),
                               score_terms(p.noise, p.system, 3.0, x, 0, y), rtol=0, atol=1e-15)


def test_general_score_sign_convention():
    # combined score of a mean-shift kernel p(y - gamma) is +y/sigma^2; the score term is its negative
    sigma = 0.5

    def sampler(g, z, rng):
        raw = g + sigma * rng.standard_normal((len(z), 1))
        return NoiseSample(raw, raw)

    model = GeneralScore(sampler, lambda g, x, y: (y.raw[:, 0] - g) / sigma**2)
    y = sampler(0.0, np.zeros((3, 1)), np.random.default_rng(0))
    np.testing.assert_allclose(model.score_term(0.0, np.zeros((3, 1)), y), -y.raw[:, 0] / sigma**2)
