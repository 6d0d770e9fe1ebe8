"""Order-of-magnitude choices of window, noise scale and sample count.

Error model (all constants set to one)::

    eps ~ theta**W + sqrt(W) / (sigma * sqrt(L)) + sigma / (dgamma * (1 - theta))

The first term is the truncation bias of the lag window, the second the
sampling error, the third (only when noise is added artificially) the
distance between the noised and the deterministic system. Recommendations
balance the terms against the target ``eps``. They are guidance, not bounds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .stats import fit_decay_rate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostModelInput:
    eps: float
    theta: float
    delta_gamma: Optional[float] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.delta_gamma is not None and not self.delta_gamma > 0:
            raise ValueError("delta_gamma must be positive")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class CostModelOutput:
    W: int
    sigma: float
    L: int
    breakdown: dict = field(default_factory=dict)


def _ceil(x: float) -> int:
    # guards against 4/(0.1**2 * 0.1**2) evaluating to 40000.000000000004
    return int(math.ceil(x * (1.0 - 1e-12)))


def window_for(eps: float, theta: float) -> int:
    return max(1, _ceil(math.log(eps) / math.log(theta)))


def breakdown(W: int, sigma: float, L: int, theta: float, delta_gamma: Optional[float] = None) -> dict:
    out = {"bias": theta**W, "sampling": math.sqrt(W) / (sigma * math.sqrt(L))}
    if delta_gamma is not None:
        out["noise"] = sigma / (delta_gamma * (1.0 - theta))
    return out


def recommend_intrinsic(eps: float, theta: float, sigma: float) -> CostModelOutput:
    """Noise scale fixed by the problem: choose ``W`` for the bias, ``L`` for the sampling error."""
    CostModelInput(eps, theta, sigma=sigma)
    W = window_for(eps, theta)
    L = _ceil(W / (sigma**2 * eps**2))
    return CostModelOutput(W, float(sigma), L, breakdown(W, sigma, L, theta))


def recommend_approximation(eps: float, theta: float, delta_gamma: float) -> CostModelOutput:
    """Noise added to approximate a deterministic system: ``sigma = eps * dgamma * (1 - theta)``."""
    CostModelInput(eps, theta, delta_gamma=delta_gamma)
    sigma = eps * delta_gamma * (1.0 - theta)
    W = window_for(eps, theta)
    L = _ceil(W / (sigma**2 * eps**2))
    return CostModelOutput(W, sigma, L, breakdown(W, sigma, L, theta, delta_gamma))


def pilot_decay_rate(problem, gamma: float, n_steps: int = 100_000, M_pre: int = 1000,
                     seed: int = 0, max_lag: int = 50) -> float:
    """Fit ``theta`` from the autocorrelation of ``Phi`` along one pilot orbit.

    A pragmatic stand-in: the decay rate has no constructive definition, so
    this only gives a plausible value to feed the recommendations.
    """
    sys, noise, obs, init = problem
    rng = np.random.default_rng(seed)
    x = np.asarray(init.sample(gamma, rng, 1), dtype=float).reshape(1, sys.dimension)
    for _ in range(M_pre):
        z = sys.f(gamma, x)
        x = sys.wrap(z + noise.sample(gamma, z, rng).embedded)
    phis = np.empty(n_steps)
    for k in range(n_steps):
        z = sys.f(gamma, x)
        x = sys.wrap(z + noise.sample(gamma, z, rng).embedded)
        phis[k] = obs(x)[0]
    theta = fit_decay_rate(phis, max_lag)
    log.info("pilot decay rate theta=%.3g from %d steps (autocorrelation fit, rough)", theta, n_steps)
    return theta


def check_recommendation(rec: CostModelOutput, eps: float, repetitions_std: float) -> bool:
    """Soft check: repeated-run spread of the derivative within ``2 * eps``."""
    ok = repetitions_std <= 2 * eps
    log.log(logging.INFO if ok else logging.WARNING,
            "recommendation W=%d sigma=%.3g L=%d: repeated-run std %.3g vs 2*eps=%.3g",
            rec.W, rec.sigma, rec.L, repetitions_std, 2 * eps)
    return ok
