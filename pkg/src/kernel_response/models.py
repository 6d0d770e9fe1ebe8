"""Benchmark systems packaged as ready-to-run problems.

* :func:`build_tent` - noisy tent map with an elevating apex on the unit circle.
* :func:`build_network` - 9-neuron tanh network unrolled over 50 layers.
* :func:`build_ar1` - scalar linear Gaussian recursion with closed-form answers.
"""
from __future__ import annotations

import enum
import warnings
from importlib import resources
from typing import NamedTuple, Optional, Union

import numpy as np

from .core import Domain, InitialDistribution, Observable, SystemSpec, point_mass, uniform_torus
from .noise import DirectionalGaussian, IsotropicGaussian


class Problem(NamedTuple):
    system: SystemSpec
    noise: object
    observable: Observable
    init: InitialDistribution


# ---------------------------------------------------------------- tent map


def tent_map(gamma, x):
    return np.where(x <= 0.5, gamma * x, gamma * (1.0 - x))


def tent_map_derivative(gamma, x):
    return np.where(x <= 0.5, x, 1.0 - x)


def identity_observable(x):
    return x[:, 0]


def build_tent(gamma: float = 3.0, sigma: float = 0.1) -> Problem:
    """Tent map ``x -> gamma*x`` (``x <= 1/2``) or ``gamma*(1-x)``, plus noise, mod 1.

    The observable is ``Phi(x) = x``. Both branches agree at ``x = 1/2``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not 0 < gamma <= 4:
        warnings.warn(f"gamma={gamma} is outside (0, 4]; the image leaves the usual branch structure")
    sys = SystemSpec(1, tent_map, tent_map_derivative, Domain.TORUS)
    return Problem(sys, IsotropicGaussian(sigma, 1), Observable(identity_observable), uniform_torus(1))


# ---------------------------------------------------------------- AR(1)


def build_ar1(a: float = 0.5, gamma: float = 0.0, sigma: float = 0.3) -> Problem:
    """``x -> a*x + gamma + N(0, sigma^2)``; stationary mean ``gamma / (1 - a)``.

    The ``gamma`` argument only documents the default operating point; the
    map reads gamma from the estimator configuration.
    """
    if not abs(a) < 1:
        raise ValueError(f"|a| = {abs(a)} >= 1: no stationary law")
    if not sigma > 0:
        raise ValueError("sigma must be positive")

    def f(g, x):
        return a * x + g

    def df(g, x):
        return np.ones_like(x)

    sys = SystemSpec(1, f, df, Domain.EUCLIDEAN)
    return Problem(sys, IsotropicGaussian(sigma, 1), Observable(identity_observable), point_mass([0.0]))


def ar1_stationary_mean(a: float, gamma: float) -> float:
    return gamma / (1.0 - a)


def ar1_stationary_variance(a: float, sigma: float) -> float:
    return sigma**2 / (1.0 - a**2)


def ar1_response(a: float, T: Optional[int] = None) -> float:
    """d/dgamma of ``E[x_T]`` from ``x_0 = 0`` (``T=None``: stationary)."""
    if T is None:
        return 1.0 / (1.0 - a)
    return (1.0 - a**T) / (1.0 - a)


# ---------------------------------------------------------------- tanh network

N_NEURONS = 9
N_LAYERS = 50
GAIN = 4.0


def load_j0() -> np.ndarray:
    """The published 9x9 base weight matrix, read from the packaged CSV."""
    text = resources.files("kernel_response").joinpath("data/J0.csv").read_text()
    return np.array([[float(v) for v in line.split(",")] for line in text.split()])


J0 = load_j0()
J0.setflags(write=False)


class NoiseMode(enum.Enum):
    FOLIATED = "foliated"
    FULL = "full"
    NONE = "none"


class Form(enum.Enum):
    ORIGINAL = "original"
    CHART = "chart"


def _enum(cls, value):
    return value if isinstance(value, cls) else cls(str(value).lower())


def build_network(gamma: float = 0.0, sigma: float = 1.5,
                  noise_mode: Union[NoiseMode, str] = NoiseMode.FOLIATED,
                  form: Union[Form, str] = Form.CHART,
                  T: int = N_LAYERS, gain: float = GAIN, J: Optional[np.ndarray] = None) -> Problem:
    """Chaotic tanh network as a ``T``-step time-inhomogeneous problem.

    Original coordinates: ``x' -> J tanh(x' + gamma*1)``, ``Phi = sum(x')``,
    ``x'_0 ~ N(0, I)``.

    Chart coordinates ``x = x' + gamma*1``: ``x -> J tanh(x) + gamma*1`` so the
    perturbation is the constant field ``1``; ``Phi = -M*gamma + sum(x)`` and
    ``x_0 = N(0, I) + gamma*1``. The chart form carries ``dPhi/dgamma = -M``
    and the initial-law score ``x_0 . 1 - gamma*M``.

    Because the chart observable and initial law depend on gamma, a built
    problem is tied to the ``gamma`` given here.

    ``noise_mode``: ``foliated`` adds ``N(0, sigma^2)`` along ``1/sqrt(M)``;
    ``full`` adds ``N(0, sigma^2 I)``; ``none`` returns ``noise=None``.
    """
    noise_mode = _enum(NoiseMode, noise_mode)
    form = _enum(Form, form)
    J = (gain * J0) if J is None else np.asarray(J, dtype=float)
    m = J.shape[0]
    ones = np.ones(m)
    Jt = np.ascontiguousarray(J.T)

    if form is Form.CHART:
        def f(g, x):
            return np.tanh(x) @ Jt + g

        def df(g, x):
            return np.ones_like(x)

        def phi(x):
            return x.sum(axis=1) - m * gamma

        def init_sampler(g, rng, n):
            return rng.standard_normal((n, m)) + g

        observable = Observable(phi, param_derivative=lambda g, x: np.full(x.shape[0], -float(m)))
        init = InitialDistribution(init_sampler, score_gamma=lambda g, x0: x0.sum(axis=1) - g * m)
    else:
        def f(g, x):
            return np.tanh(x + g) @ Jt

        def df(g, x):
            return (1.0 - np.tanh(x + g) ** 2) @ Jt

        observable = Observable(lambda x: x.sum(axis=1))
        init = InitialDistribution(lambda g, rng, n: rng.standard_normal((n, m)))

    sys = SystemSpec(m, (f,) * T, (df,) * T, Domain.EUCLIDEAN)
    if noise_mode is NoiseMode.NONE:
        noise = None
    else:
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        model = (DirectionalGaussian(sigma, ones / np.sqrt(m)) if noise_mode is NoiseMode.FOLIATED
                 else IsotropicGaussian(sigma, m))
        noise = (model,) * T
    return Problem(sys, noise, observable, init)


def jacobian_product_norms(n_samples: int = 200, T: int = N_LAYERS, gain: float = GAIN,
                           gamma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Spectral norms of the ``T``-layer Jacobian products of the noise-free network."""
    rng = np.random.default_rng(seed)
    J = gain * J0
    out = np.empty(n_samples)
    for k in range(n_samples):
        x = rng.standard_normal(J.shape[0])
        prod = np.eye(J.shape[0])
        for _ in range(T):
            d = 1.0 - np.tanh(x + gamma) ** 2
            prod = (J * d) @ prod
            x = J @ np.tanh(x + gamma)
        out[k] = np.linalg.norm(prod, 2)
    return out


def backprop_integrand(n_samples: int = 1000, T: int = N_LAYERS, gain: float = GAIN,
                       gamma: float = 0.0, seed: int = 0) -> np.ndarray:
    """Per-sample pathwise (backpropagation) response of ``sum(x'_T)`` for the noise-free network.

    Its spread shows what the ensemble formula would cost; the kernel
    estimators never evaluate it.
    """
    rng = np.random.default_rng(seed)
    J = gain * J0
    ones = np.ones(J.shape[0])
    out = np.empty(n_samples)
    for k in range(n_samples):
        xs = [rng.standard_normal(J.shape[0])]
        for _ in range(T):
            xs.append(J @ np.tanh(xs[-1] + gamma))
        covector = ones.copy()
        total = 0.0
        for m in range(T - 1, -1, -1):
            jac = J * (1.0 - np.tanh(xs[m] + gamma) ** 2)
            total += covector @ (jac @ ones)
            covector = jac.T @ covector
        out[k] = total
    return out
