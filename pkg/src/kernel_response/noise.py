"""Noise models: samplers and the score functions fed to the estimators.

Every model produces batches of :class:`NoiseSample` and turns a perturbation
direction ``delta_f`` plus a sample into the scalar score term

    I = delta_f . (dp/p)(y)

whose negated running sum multiplies the observable in the response formulas.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class NoiseSample:
    """A batch of ``K`` noise draws.

    ``raw`` has shape ``(K, r)`` in the noise's own coordinates (``r = M`` for
    full-dimensional noise, ``r = 1`` along a single direction); ``embedded``
    has shape ``(K, M)`` and is the increment added to the state.
    """

    raw: np.ndarray
    embedded: np.ndarray

    def __len__(self):
        return self.raw.shape[0]


class IsotropicGaussian:
    """Centered Gaussian noise ``N(0, sigma^2 I)`` in all ``M`` directions."""

    def __init__(self, sigma: float, dimension: int = 1):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)
        self.dimension = int(dimension)

    def __repr__(self):
        return f"IsotropicGaussian(sigma={self.sigma}, dimension={self.dimension})"

    def sample(self, gamma: float, z: np.ndarray, rng: np.random.Generator) -> NoiseSample:
        raw = self.sigma * rng.standard_normal((np.shape(z)[0], self.dimension))
        return NoiseSample(raw, raw)

    def sample_raw(self, rng: np.random.Generator, n: int) -> NoiseSample:
        return self.sample(0.0, np.empty((n, self.dimension)), rng)

    def log_density(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        r = raw.shape[-1]
        return -0.5 * np.sum(raw**2, axis=-1) / self.sigma**2 - 0.5 * r * np.log(2 * np.pi * self.sigma**2)

    def score(self, y: NoiseSample) -> np.ndarray:
        return -y.raw / self.sigma**2

    def score_contribution(self, delta_f: np.ndarray, y: NoiseSample) -> np.ndarray:
        delta_f = np.asarray(delta_f, dtype=float)
        if delta_f.shape[-1] != self.dimension:
            raise ValueError(f"delta_f has dimension {delta_f.shape[-1]}, noise has {self.dimension}")
        return np.einsum("...i,...i->...", delta_f, self.score(y))


class DirectionalGaussian(IsotropicGaussian):
    """Scalar Gaussian noise ``Y ~ N(0, sigma^2)`` applied along a fixed unit vector.

    This is the plane-foliation case: the noise only moves the state within
    the line ``x + span(direction)``, and only the component of ``delta_f``
    along ``direction`` enters the score term.
    """

    def __init__(self, sigma: float, direction):
        direction = np.asarray(direction, dtype=float).ravel()
        norm = np.linalg.norm(direction)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"direction must be a unit vector, got norm {norm!r}")
        super().__init__(sigma, direction.size)
        self.direction = direction
        self.direction.setflags(write=False)

    def __repr__(self):
        return f"DirectionalGaussian(sigma={self.sigma}, direction={self.direction.tolist()})"

    @classmethod
    def uniform_diagonal(cls, sigma: float, dimension: int) -> "DirectionalGaussian":
        """Noise along ``(1, ..., 1) / sqrt(M)``."""
        return cls(sigma, np.full(dimension, 1.0 / np.sqrt(dimension)))

    def sample(self, gamma: float, z: np.ndarray, rng: np.random.Generator) -> NoiseSample:
        raw = self.sigma * rng.standard_normal((np.shape(z)[0], 1))
        return NoiseSample(raw, raw * self.direction)

    def log_density(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        return -0.5 * raw[..., 0] ** 2 / self.sigma**2 - 0.5 * np.log(2 * np.pi * self.sigma**2)

    def score_contribution(self, delta_f: np.ndarray, y: NoiseSample) -> np.ndarray:
        delta_f = np.asarray(delta_f, dtype=float)
        if delta_f.shape[-1] != self.dimension:
            raise ValueError(f"delta_f has dimension {delta_f.shape[-1]}, noise has {self.dimension}")
        return (delta_f @ self.direction) * self.score(y)[..., 0]


class GeneralScore:
    """Noise whose law may depend on gamma and on ``z = f(x)``.

    Parameters
    ----------
    sampler : callable
        ``sampler(gamma, z, rng) -> NoiseSample`` for ``z`` of shape ``(K, M)``.
    combined_score : callable
        ``combined_score(gamma, x, y) -> (K,)``: the total gamma-derivative of
        the log transition density, ``d/dgamma log p_{gamma, f_gamma(x)}(y)``
        evaluated with ``y`` held at the realized ``x_{m+1} - f_gamma(x_m)``.
        It already contains the ``delta_f`` contribution, so the system's
        ``map_derivative`` is not used with this model.

    Notes
    -----
    For a translation kernel ``p(y)`` the combined score reduces to
    ``-delta_f(x) . (dp/p)(y)``; :meth:`score_contribution` returns its
    negative so that all models share the sign convention of the Gaussian ones.
    """

    def __init__(
        self,
        sampler: Callable[[float, np.ndarray, np.random.Generator], NoiseSample],
        combined_score: Callable[[float, np.ndarray, NoiseSample], np.ndarray],
    ):
        self.sampler = sampler
        self.combined_score = combined_score

    def sample(self, gamma: float, z: np.ndarray, rng: np.random.Generator) -> NoiseSample:
        return self.sampler(gamma, z, rng)

    def score_term(self, gamma: float, x: np.ndarray, y: NoiseSample) -> np.ndarray:
        return -np.asarray(self.combined_score(gamma, x, y), dtype=float)


def score_terms(noise, sys, gamma: float, x: np.ndarray, n: int, y: NoiseSample) -> np.ndarray:
    """Per-sample ``I = delta_f(x) . (dp/p)(y)`` for step ``n -> n + 1``."""
    if isinstance(noise, GeneralScore):
        return noise.score_term(gamma, x, y)
    return noise.score_contribution(sys.df(gamma, x, n), y)


def gaussian_as_general(model: IsotropicGaussian, map_derivative) -> GeneralScore:
    """Wrap a translation-invariant Gaussian as a :class:`GeneralScore`.

    Useful as a cross-check: estimates must coincide with the plain model.
    """

    def combined(gamma, x, y):
        return -model.score_contribution(np.broadcast_to(map_derivative(gamma, x), np.shape(x)), y)

    return GeneralScore(model.sample, combined)
