"""Independent reference computations for validating the estimators.

Two routes that share nothing with the score-function code:

* a grid transfer operator for 1-D maps on a periodic interval, giving
  stationary densities and their finite-difference response in gamma;
* central finite differences of plain ensemble averages with common random
  numbers, for any system.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import NonFiniteError
from .models import Problem
from .parallel import run_units, split, unit_rngs


class ConvergenceError(RuntimeError):
    pass


@dataclass
class GridDensity:
    """Piecewise-constant density on ``N`` equal bins of the periodic interval ``[lo, hi)``."""

    weights: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    @property
    def N(self) -> int:
        return self.weights.size

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.N

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.N) + 0.5) * self.width

    @classmethod
    def uniform(cls, N: int, lo: float = 0.0, hi: float = 1.0) -> "GridDensity":
        return cls(np.full(N, 1.0 / (hi - lo)), lo, hi)

    def mass(self) -> float:
        return float(self.weights.sum() * self.width)

    def normalized(self) -> "GridDensity":
        return GridDensity(self.weights / self.mass(), self.lo, self.hi)

    def expect(self, phi: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.sum(phi(self.centers) * self.weights) * self.width)

    def l1_distance(self, other: "GridDensity") -> float:
        return float(np.sum(np.abs(self.weights - other.weights)) * self.width)

    def coarsen(self, n_bins: int) -> "GridDensity":
        """Merge adjacent bins; ``N`` must be a multiple of ``n_bins``."""
        if self.N % n_bins:
            raise ValueError(f"N={self.N} is not a multiple of {n_bins}")
        return GridDensity(self.weights.reshape(n_bins, -1).mean(axis=1), self.lo, self.hi)

    def to_csv(self, path_or_file, header: str = "") -> None:
        lines = [f"# {h}" for h in header.splitlines()] if header else []
        lines.append("bin_center,weight")
        lines += [f"{c:.10g},{w:.12g}" for c, w in zip(self.centers, self.weights)]
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)


@functools.lru_cache(maxsize=32)
def _kernel_fft(N: int, sigma: float, period: float) -> Optional[np.ndarray]:
    h = period / N
    if sigma < 1e-3 * h:
        return None
    k = np.arange(N) * h
    k = np.minimum(k, period - k)
    n_wrap = int(math.ceil(8 * sigma / period)) + 1
    ker = np.zeros(N)
    for j in range(-n_wrap, n_wrap + 1):
        ker += np.exp(-0.5 * ((k + j * period) / sigma) ** 2)
    ker /= ker.sum()
    return np.fft.rfft(ker)


def push_density(d: GridDensity, f: Callable[[np.ndarray], np.ndarray], sigma: float) -> GridDensity:
    """One application of noise-after-map on the grid.

    Each bin's mass goes to the image of its midpoint under ``f`` (taken mod
    the period), split linearly between the two nearest bin centers; then it
    is circularly convolved with the wrapped Gaussian of scale ``sigma`` and
    renormalized.
    """
    N = d.N
    h = d.width
    period = d.hi - d.lo
    img = np.asarray(f(d.centers), dtype=float)
    if not np.all(np.isfinite(img)):
        raise NonFiniteError("grid image")
    s = np.mod((img - d.lo) / h - 0.5, N)
    j = np.floor(s).astype(np.int64)
    frac = s - j
    j %= N
    mass = d.weights * h
    out = np.bincount(j, mass * (1.0 - frac), minlength=N) + np.bincount((j + 1) % N, mass * frac, minlength=N)
    kf = _kernel_fft(N, float(sigma), float(period))
    if kf is not None:
        out = np.fft.irfft(np.fft.rfft(out) * kf, N)
        np.maximum(out, 0.0, out=out)
    return GridDensity(out / (out.sum() * h), d.lo, d.hi)


def stationary_density(f: Callable[[np.ndarray], np.ndarray], sigma: float, N: int = 4096,
                       tol: float = 1e-10, lo: float = 0.0, hi: float = 1.0,
                       start: Optional[GridDensity] = None, max_iter: int = 100_000) -> GridDensity:
    """Power iteration of :func:`push_density` until the L1 change drops below ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    d = start if start is not None else GridDensity.uniform(N, lo, hi)
    for _ in range(max_iter):
        nxt = push_density(d, f, sigma)
        if nxt.l1_distance(d) < tol:
            return nxt
        d = nxt
    raise ConvergenceError(f"no stationary density after {max_iter} iterations (sigma too small for N={N}?)")


def grid_linear_response(f: Callable[[float, np.ndarray], np.ndarray], gamma: float, sigma: float,
                         phi: Callable[[np.ndarray], np.ndarray], N: int = 4096, delta_gamma: float = 1e-3,
                         tol: float = 1e-10, lo: float = 0.0, hi: float = 1.0) -> float:
    """Central difference in gamma of the grid stationary average of ``phi``."""
    base = stationary_density(lambda x: f(gamma, x), sigma, N, tol, lo, hi)
    vals = []
    for g in (gamma + delta_gamma, gamma - delta_gamma):
        d = stationary_density(lambda x, g=g: f(g, x), sigma, N, tol, lo, hi, start=base)
        vals.append(d.expect(phi))
    return (vals[0] - vals[1]) / (2 * delta_gamma)


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True)
class FDOracleConfig:
    delta_gamma: float = 0.05
    L: int = 10_000
    seed: int = 0
    block_size: int = 4096
    workers: Optional[int] = 1

    def __post_init__(self):
        if not self.delta_gamma > 0:
            raise ValueError("delta_gamma must be positive")
        if self.L < 2:
            raise ValueError("L must be >= 2")


def _endpoint_block(problem: Problem, T: int, gamma: float, rng, n: int) -> np.ndarray:
    sys, noise, obs, init = problem
    x = np.asarray(init.sample(gamma, rng, n), dtype=float).reshape(n, sys.dimension)
    for m in range(T):
        z = sys.f(gamma, x, m)
        if noise is not None:
            model = noise[m] if isinstance(noise, (list, tuple)) else noise
            z = z + model.sample(gamma, z, rng).embedded
        x = sys.wrap(z)
    out = obs(x)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("observable", step=T)
    return out


def ensemble_endpoints(problem: Problem, T: int, gamma: float, L: int, seed: int = 0,
                       block_size: int = 4096, workers: Optional[int] = 1) -> np.ndarray:
    """``Phi(x_T)`` for ``L`` independent paths (noise-free when ``problem.noise`` is None)."""
    sizes = split(L, block_size)
    rngs = unit_rngs(seed, len(sizes))
    parts = run_units(lambda i: _endpoint_block(problem, T, gamma, rngs[i], sizes[i]), len(sizes), workers)
    return np.concatenate(parts)


def ensemble_mean(problem: Problem, T: int, gamma: float, L: int, seed: int = 0,
                  block_size: int = 4096, workers: Optional[int] = 1) -> tuple[float, float]:
    """Plain Monte-Carlo ``E[Phi(x_T)]`` and its standard error."""
    vals = ensemble_endpoints(problem, T, gamma, L, seed, block_size, workers)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(L))


def fd_ensemble_response(problem: Union[Problem, Callable[[float], Problem]], T: int, cfg: FDOracleConfig,
                         gamma: float = 0.0) -> tuple[float, float]:
    """Central difference of ``E[Phi(x_T)]`` at ``gamma +- delta_gamma`` with common random numbers.

    ``problem`` may be a callable ``gamma -> Problem`` for problems whose
    observable or initial law depends on gamma. Returns ``(value, se)`` with
    the error taken from the per-path differences.
    """
    at = problem if callable(problem) and not isinstance(problem, Problem) else (lambda g: problem)
    dg = cfg.delta_gamma
    hi = ensemble_endpoints(at(gamma + dg), T, gamma + dg, cfg.L, cfg.seed, cfg.block_size, cfg.workers)
    lo = ensemble_endpoints(at(gamma - dg), T, gamma - dg, cfg.L, cfg.seed, cfg.block_size, cfg.workers)
    diff = (hi - lo) / (2 * dg)
    return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(cfg.L))
