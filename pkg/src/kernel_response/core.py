"""Domain types for parameterized random dynamical systems.

A system advances by ``x_{n+1} = f_gamma(x_n) + y_{n+1}``, optionally wrapped
onto the unit torus. All callables are vectorized: states are arrays of shape
``(K, M)`` holding ``K`` independent copies of an ``M``-dimensional state.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

MapFn = Callable[[float, np.ndarray], np.ndarray]
ObservableFn = Callable[[np.ndarray], np.ndarray]


class Domain(enum.Enum):
    EUCLIDEAN = "euclidean"
    TORUS = "torus"


class NonFiniteError(FloatingPointError):
    """Raised when a trajectory, observable or score term leaves the finite reals."""

    def __init__(self, what: str, step: Optional[int] = None, path: Optional[int] = None):
        where = []
        if path is not None:
            where.append(f"path {path}")
        if step is not None:
            where.append(f"step {step}")
        msg = f"non-finite {what}"
        if where:
            msg += " at " + ", ".join(where)
        super().__init__(msg)
        self.step = step
        self.path = path


def as_states(x, dimension: int) -> np.ndarray:
    """Coerce ``x`` to a float array of shape ``(K, dimension)``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size == dimension else arr.reshape(-1, 1)
    if arr.shape[-1] != dimension:
        raise ValueError(f"state dimension {arr.shape[-1]} != system dimension {dimension}")
    return arr


def _per_step(obj, n: int):
    if isinstance(obj, (list, tuple)):
        return obj[n]
    return obj


@dataclass(frozen=True)
class SystemSpec:
    """A parameterized map ``f_gamma`` with its parameter derivative.

    Parameters
    ----------
    dimension : int
        State dimension ``M``.
    map : callable or sequence of callables
        ``map(gamma, x) -> f_gamma(x)`` for ``x`` of shape ``(K, M)``. A
        sequence of length ``T`` makes the system time-inhomogeneous, with
        entry ``n`` advancing step ``n -> n + 1``.
    map_derivative : callable or sequence of callables
        ``map_derivative(gamma, x) -> d f_gamma(x) / d gamma``, same layout.
    domain : Domain
        ``Domain.TORUS`` wraps every coordinate into ``[0, 1)`` after the noise
        is added.
    horizon : int, optional
        Fixed number of steps. Required (and inferred) for sequence-valued maps.
    """

    dimension: int
    map: Union[MapFn, Sequence[MapFn]]
    map_derivative: Union[MapFn, Sequence[MapFn]]
    domain: Domain = Domain.EUCLIDEAN
    horizon: Optional[int] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        seq_map = isinstance(self.map, (list, tuple))
        seq_der = isinstance(self.map_derivative, (list, tuple))
        if seq_map != seq_der:
            raise ValueError("map and map_derivative must both be callables or both sequences")
        if seq_map:
            if len(self.map) != len(self.map_derivative):
                raise ValueError("per-step map and map_derivative lengths differ")
            if self.horizon is None:
                object.__setattr__(self, "horizon", len(self.map))
            elif self.horizon != len(self.map):
                raise ValueError("horizon does not match the number of per-step maps")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def time_homogeneous(self) -> bool:
        return not isinstance(self.map, (list, tuple))

    def f(self, gamma: float, x: np.ndarray, n: int = 0) -> np.ndarray:
        return np.asarray(_per_step(self.map, n)(gamma, x), dtype=float)

    def df(self, gamma: float, x: np.ndarray, n: int = 0) -> np.ndarray:
        out = np.asarray(_per_step(self.map_derivative, n)(gamma, x), dtype=float)
        return np.broadcast_to(out, np.shape(x))

    def wrap(self, x: np.ndarray) -> np.ndarray:
        if self.domain is Domain.TORUS:
            x = np.mod(x, 1.0)
            # mod of a tiny negative number can round up to exactly 1.0
            x[x >= 1.0] = 0.0
        return x


@dataclass(frozen=True)
class Observable:
    """Scalar observable ``Phi`` with an optional explicit parameter derivative.

    ``param_derivative(gamma, x)`` is only needed when the observable itself
    depends on gamma, e.g. after a gamma-dependent change of coordinates.
    """

    eval: ObservableFn
    param_derivative: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(x), dtype=float).reshape(np.shape(x)[0])


@dataclass(frozen=True)
class InitialDistribution:
    """Sampler for ``x_0`` plus the optional gamma-score ``d log h_0 / d gamma``.

    ``sampler(gamma, rng, n)`` returns ``n`` initial states; the gamma argument
    lets charts that move the initial law with gamma express that dependence.
    """

    sampler: Callable[[float, np.random.Generator, int], np.ndarray]
    score_gamma: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def sample(self, gamma: float, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(self.sampler(gamma, rng, n), dtype=float)


def point_mass(x0) -> InitialDistribution:
    """Initial law concentrated at a single point."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    return InitialDistribution(lambda gamma, rng, n: np.tile(x0, (n, 1)))


def standard_normal(dimension: int, scale: float = 1.0) -> InitialDistribution:
    def sampler(gamma, rng, n):
        return scale * rng.standard_normal((n, dimension))

    return InitialDistribution(sampler)


def uniform_torus(dimension: int) -> InitialDistribution:
    return InitialDistribution(lambda gamma, rng, n: rng.random((n, dimension)))


def step(sys: SystemSpec, gamma: float, n: int, x: np.ndarray, y) -> np.ndarray:
    """Advance states ``x`` by one step with noise increment ``y``.

    ``y`` is either a :class:`~kernel_response.noise.NoiseSample` or an array
    broadcastable to the state shape (already embedded in state space).
    """
    inc = getattr(y, "embedded", y)
    out = sys.wrap(sys.f(gamma, x, n) + inc)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("state", step=n + 1)
    return out


def check_map_derivative(sys: SystemSpec, gamma: float, x, h: float = 1e-6, n: int = 0) -> float:
    """Worst relative discrepancy between ``map_derivative`` and a central difference."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = as_states(x, sys.dimension)
    fd = (sys.f(gamma + h, x, n) - sys.f(gamma - h, x, n)) / (2 * h)
    an = sys.df(gamma, x, n)
    scale = np.maximum(np.abs(an), 1.0)
    return float(np.max(np.abs(fd - an) / scale))
