"""Kernel-differentiation (likelihood-ratio) linear response estimators.

Two drivers share one score-term convention, ``I = delta_f(x_m) . (dp/p)(y_{m+1})``:

* :func:`finite_time_estimator` differentiates ``E[Phi(x_T)]`` over an
  ensemble of independent paths, weighting each centered endpoint value by
  ``S = -sum_m I_m``.
* :func:`ergodic_estimator` differentiates the stationary average of ``Phi``
  from long orbits, correlating each ``I`` with the next ``W`` centered values
  of ``Phi``.

Foliated (directional) noise goes through exactly the same code: the noise
model projects ``delta_f`` onto its direction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Domain, InitialDistribution, NonFiniteError, Observable, SystemSpec, point_mass, uniform_torus
from .noise import score_terms
from .parallel import run_units, split, unit_rngs
from .stats import CompensatedSum, LagCrossAccumulator, BatchSums, StreamingMoments, se_of_batch_means


class CorrectionsUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class FiniteTimeConfig:
    T: int
    L: int
    gamma: float = 0.0
    seed: int = 0
    centralize: bool = True
    block_size: int = 4096
    workers: Optional[int] = 1

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


@dataclass(frozen=True)
class ErgodicConfig:
    """Settings for :func:`ergodic_estimator`.

    ``chains`` independent orbits of ``L / chains`` samples each are run in
    lockstep, each after its own ``M_pre`` spin-up steps; ``chains=1`` is the
    single-orbit procedure. ``None`` picks the largest divisor of ``L`` not
    above 64 that leaves at least ``100 * W`` samples per orbit.
    """

    W: int = 7
    L: int = 10**6
    gamma: float = 0.0
    M_pre: int = 1000
    seed: int = 0
    chains: Optional[int] = None
    batch_length: Optional[int] = None
    centralize: bool = True
    chunk: int = 2048
    chains_per_unit: int = 16
    workers: Optional[int] = 1

    def __post_init__(self):
        if self.W < 1:
            raise ValueError("W must be >= 1")
        if self.W >= self.L:
            raise ValueError(f"W={self.W} must be smaller than L={self.L}")
        if self.M_pre < 0:
            raise ValueError("M_pre must be >= 0")
        if self.chains is not None and (self.chains < 1 or self.L % self.chains):
            raise ValueError(f"chains={self.chains} must be a positive divisor of L={self.L}")
        if self.L < 100 * self.W:
            warnings.warn(f"L={self.L} < 100*W={100 * self.W}: the window sum will be poorly averaged")

    @property
    def n_chains(self) -> int:
        if self.chains is not None:
            return self.chains
        for c in range(64, 0, -1):
            if self.L % c == 0 and self.L // c >= 100 * self.W:
                return c
        return 1

    @property
    def resolved_batch_length(self) -> int:
        return self.batch_length or 10 * self.W


@dataclass(frozen=True)
class ChartCorrections:
    """Extra response terms when the observable and initial law depend on gamma.

    A term is ``None`` when its hook is missing; ``status`` then says why.
    """

    delta_phi_term: Optional[float]
    initial_score_term: Optional[float]
    se_delta_phi: float = math.nan
    se_initial_score: float = math.nan
    status: str = "ok"

    @property
    def available(self) -> bool:
        return self.delta_phi_term is not None and self.initial_score_term is not None


@dataclass
class EstimatorResult:
    phi_avg: float
    dphi_avg: float
    se_phi: float
    se_dphi: float
    samples_used: int
    correction_terms: Optional[ChartCorrections] = None
    se_total: float = math.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        """Main term plus chart corrections (when the problem has them)."""
        c = self.correction_terms
        if c is None:
            return self.dphi_avg
        if not c.available:
            raise CorrectionsUnavailable(c.status)
        return self.dphi_avg + c.delta_phi_term + c.initial_score_term


def _check_finite(values, what, step, offset=0):
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NonFiniteError(what, step=step, path=offset + int(np.argmax(bad)))


def _noise_at(noise, n):
    return noise[n] if isinstance(noise, (list, tuple)) else noise


def _correction_values(observable: Observable, init: InitialDistribution, gamma, x_final, x_initial):
    dphi = None if observable.param_derivative is None else np.broadcast_to(
        np.asarray(observable.param_derivative(gamma, x_final), dtype=float), (len(x_final),)
    )
    s0 = None if init.score_gamma is None else np.asarray(init.score_gamma(gamma, x_initial), dtype=float)
    return dphi, s0


def _aggregate_corrections(phi, phi_avg, dphi_vals, s0_vals, centralize=True) -> ChartCorrections:
    missing = []
    n = len(phi)
    dterm = se_d = None
    if dphi_vals is None:
        missing.append("observable.param_derivative")
    else:
        dterm = float(np.mean(dphi_vals))
        se_d = float(np.std(dphi_vals, ddof=1) / math.sqrt(n))
    iterm = se_i = None
    if s0_vals is None:
        missing.append("init.score_gamma")
    else:
        centered = (phi - phi_avg) if centralize else phi
        prod = centered * s0_vals
        iterm = float(np.mean(prod))
        se_i = float(np.std(prod, ddof=1) / math.sqrt(n))
    status = "ok" if not missing else "corrections unavailable: missing " + ", ".join(missing)
    return ChartCorrections(
        dterm, iterm,
        math.nan if se_d is None else se_d,
        math.nan if se_i is None else se_i,
        status,
    )


def chart_corrections(observable: Observable, init: InitialDistribution, gamma: float,
                      x_final, x_initial, centralize: bool = True) -> ChartCorrections:
    """Observable-derivative and initial-law-score terms from stored path endpoints.

    ``delta_phi_term = mean(dPhi/dgamma(x_T))`` and
    ``initial_score_term = mean((Phi(x_T) - Phi_avg) * dlog h_0/dgamma(x_0))``;
    with ``centralize=False`` the raw ``Phi(x_T)`` is used, which has the same
    expectation.
    """
    x_final = np.asarray(x_final, dtype=float)
    x_initial = np.asarray(x_initial, dtype=float)
    phi = observable(x_final)
    dphi, s0 = _correction_values(observable, init, gamma, x_final, x_initial)
    return _aggregate_corrections(phi, float(np.mean(phi)), dphi, s0, centralize)


def _finite_block(sys, noise, observable, init, cfg, rng, n, offset, want_corr):
    gamma = cfg.gamma
    x = np.asarray(init.sample(gamma, rng, n), dtype=float).reshape(n, sys.dimension)
    x0 = x.copy() if want_corr else None
    s = np.zeros(n)
    step_means = np.empty(cfg.T)
    step_m2 = np.empty(cfg.T)
    for m in range(cfg.T):
        z = sys.f(gamma, x, m)
        y = _noise_at(noise, m).sample(gamma, z, rng)
        i_m = score_terms(_noise_at(noise, m), sys, gamma, x, m, y)
        _check_finite(i_m, "score term", m + 1, offset)
        s -= i_m
        step_means[m] = i_m.mean()
        step_m2[m] = np.sum((i_m - step_means[m]) ** 2)
        x = sys.wrap(z + y.embedded)
        _check_finite(x.sum(axis=1), "state", m + 1, offset)
    phi = observable(x)
    _check_finite(phi, "observable", cfg.T, offset)
    dphi = s0 = None
    if want_corr:
        dphi, s0 = _correction_values(observable, init, gamma, x, x0)
    return phi, s, step_means, step_m2, dphi, s0


def finite_time_estimator(sys: SystemSpec, noise, observable: Observable,
                          init: InitialDistribution, cfg: FiniteTimeConfig) -> EstimatorResult:
    """Ensemble estimate of ``d/dgamma E[Phi(x_T)]``.

    ``noise`` is one model, or a sequence of ``T`` models for per-step noise.
    Only per-path ``(S_l, Phi_l)`` scalars are kept; chart corrections are
    evaluated when either the observable or the initial law carries a gamma
    hook.
    """
    if isinstance(noise, (list, tuple)) and len(noise) != cfg.T:
        raise ValueError(f"got {len(noise)} per-step noise models for T={cfg.T}")
    if sys.horizon is not None and sys.horizon != cfg.T:
        raise ValueError(f"system horizon {sys.horizon} != T={cfg.T}")
    want_corr = observable.param_derivative is not None or init.score_gamma is not None
    sizes = split(cfg.L, cfg.block_size)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    rngs = unit_rngs(cfg.seed, len(sizes))

    def unit(i):
        return _finite_block(sys, noise, observable, init, cfg, rngs[i], sizes[i], int(offsets[i]), want_corr)

    blocks = run_units(unit, len(sizes), cfg.workers)
    phi = np.concatenate([b[0] for b in blocks])
    s = np.concatenate([b[1] for b in blocks])
    step_moments = []
    for m in range(cfg.T):
        acc = StreamingMoments()
        for size, b in zip(sizes, blocks):
            acc.merge_in(StreamingMoments(size, float(b[2][m]), float(b[3][m])))
        step_moments.append(acc)

    L = cfg.L
    phi_avg = float(np.mean(phi))
    centered = phi - phi_avg if cfg.centralize else phi
    prod = s * centered
    dphi_avg = float(np.mean(prod))
    result = EstimatorResult(
        phi_avg=phi_avg,
        dphi_avg=dphi_avg,
        se_phi=float(np.std(phi, ddof=1) / math.sqrt(L)),
        se_dphi=float(np.std(prod, ddof=1) / math.sqrt(L)),
        samples_used=L,
        diagnostics={
            "score_step_mean": np.array([a.mean for a in step_moments]),
            "score_step_std": np.array([a.std for a in step_moments]),
            "score_step_count": L,
        },
    )
    result.se_total = result.se_dphi
    if want_corr:
        dphi_vals = None if blocks[0][4] is None else np.concatenate([b[4] for b in blocks])
        s0_vals = None if blocks[0][5] is None else np.concatenate([b[5] for b in blocks])
        corr = _aggregate_corrections(phi, phi_avg, dphi_vals, s0_vals, cfg.centralize)
        result.correction_terms = corr
        if corr.available:
            per_path = prod + dphi_vals + centered * s0_vals
            result.se_total = float(np.std(per_path, ddof=1) / math.sqrt(L))
    return result


def _default_start(sys: SystemSpec) -> InitialDistribution:
    if sys.domain is Domain.TORUS:
        return uniform_torus(sys.dimension)
    return point_mass(np.zeros(sys.dimension))


def _ergodic_unit(sys, noise, observable, start, cfg, rng, n_chains, per_chain):
    gamma = cfg.gamma
    x = np.asarray(start.sample(gamma, rng, n_chains), dtype=float).reshape(n_chains, sys.dimension)
    for m in range(cfg.M_pre):
        z = sys.f(gamma, x, 0)
        x = sys.wrap(z + noise.sample(gamma, z, rng).embedded)
    _check_finite(x.sum(axis=1), "state", cfg.M_pre)

    w = cfg.W
    total = w + per_chain
    blen = cfg.resolved_batch_length
    acc = LagCrossAccumulator(w, n_chains, blen)
    phi_sum = CompensatedSum(n_chains)
    phi_batches = BatchSums(n_chains, blen)
    score_moments = StreamingMoments()
    chunk = max(int(cfg.chunk), 1)
    t = 1
    while t <= total:
        k = min(chunk, total - t + 1)
        scores = np.empty((n_chains, k))
        phis = np.empty((n_chains, k))
        for j in range(k):
            z = sys.f(gamma, x, 0)
            y = noise.sample(gamma, z, rng)
            scores[:, j] = score_terms(noise, sys, gamma, x, 0, y)
            x = sys.wrap(z + y.embedded)
            phis[:, j] = observable(x)
        if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(phis))):
            bad = ~(np.isfinite(scores) & np.isfinite(phis)).all(axis=0)
            raise NonFiniteError("state, score or observable", step=cfg.M_pre + t + int(np.argmax(bad)))
        # times t .. t+k-1 in this chunk; Phi_avg uses t <= L, scores pair from t = 2
        lo_phi, hi_phi = t, min(t + k - 1, per_chain)
        if lo_phi <= hi_phi:
            seg = phis[:, : hi_phi - lo_phi + 1]
            phi_sum.add(seg.sum(axis=1))
            phi_batches.update(seg)
        if t == 1:
            scores_fed, phis_fed = scores[:, 1:], phis[:, 1:]
        else:
            scores_fed, phis_fed = scores, phis
        acc.update(scores_fed, phis_fed)
        lo_s, hi_s = max(t, 2), min(t + k - 1, per_chain + 1)
        if lo_s <= hi_s:
            score_moments.update(scores[:, lo_s - t : hi_s - t + 1])
        t += k
    pa, pb = acc.batches()
    return acc.a, acc.b, phi_sum.value, pa, pb, phi_batches.sums(), score_moments


def ergodic_estimator(sys: SystemSpec, noise, observable: Observable, cfg: ErgodicConfig,
                      start: Optional[InitialDistribution] = None) -> EstimatorResult:
    """Orbit estimate of the derivative of the stationary average of ``Phi``.

    For each orbit: ``M_pre`` spin-up steps from ``start`` (uniform on the
    torus, otherwise the origin), then ``W + L_c`` recorded steps. The score
    term at time ``t`` is correlated with ``Phi`` at times ``t .. t+W-1`` for
    ``t = 2 .. L_c + 1`` and ``Phi_avg`` is the mean of ``Phi`` over times
    ``1 .. L_c``. Error bars come from non-overlapping batch means of length
    ``cfg.resolved_batch_length`` within each orbit.
    """
    if not sys.time_homogeneous:
        raise ValueError("the ergodic estimator needs a time-homogeneous system")
    if isinstance(noise, (list, tuple)):
        raise ValueError("the ergodic estimator needs a single noise model")
    start = start or _default_start(sys)
    n_chains = cfg.n_chains
    per_chain = cfg.L // n_chains
    unit_sizes = split(n_chains, cfg.chains_per_unit)
    rngs = unit_rngs(cfg.seed, len(unit_sizes))

    def unit(i):
        return _ergodic_unit(sys, noise, observable, start, cfg, rngs[i], unit_sizes[i], per_chain)

    parts = run_units(unit, len(unit_sizes), cfg.workers)
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])
    phi_tot = np.concatenate([p[2] for p in parts])
    batch_a = np.concatenate([p[3] for p in parts]).ravel()
    batch_b = np.concatenate([p[4] for p in parts]).ravel()
    batch_phi = np.concatenate([p[5] for p in parts]).ravel()
    score_moments = StreamingMoments()
    for p in parts:
        score_moments.merge_in(p[6])

    L = n_chains * per_chain
    w = cfg.W
    blen = cfg.resolved_batch_length
    phi_avg = math.fsum(phi_tot) / L
    a_tot = math.fsum(a)
    b_tot = math.fsum(b)
    shift = phi_avg * w if cfg.centralize else 0.0
    dphi = -(a_tot - shift * b_tot) / L

    n_batches = batch_a.size
    batch_d = -(batch_a - shift * batch_b) / blen
    se_phi, se_d = se_of_batch_means(batch_phi / blen), se_of_batch_means(batch_d)
    if n_batches < 10:
        warnings.warn(f"only {n_batches} batches of length {blen}: standard errors set to NaN, run a longer orbit")
        se_phi = se_d = math.nan
    return EstimatorResult(
        phi_avg=phi_avg,
        dphi_avg=dphi,
        se_phi=se_phi,
        se_dphi=se_d,
        samples_used=L,
        se_total=se_d,
        diagnostics={
            "chains": n_chains,
            "batches": n_batches,
            "batch_length": blen,
            "dphi_uncentralized": -a_tot / L,
            "dphi_centralized": -(a_tot - phi_avg * w * b_tot) / L,
            "score_sum": b_tot,
            "score_mean": score_moments.mean,
            "score_std": score_moments.std,
            "score_count": score_moments.count,
        },
    )


def one_step_response(q_sampler, noise, delta_f, observable, L: int, f=None, gamma: float = 0.0,
                      seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo one-step response ``-E[Phi(x_1) delta_f(x_0) . (dp/p)(y_1)]``.

    ``x_0 ~ q_sampler(rng, L)``, ``x_1 = f(x_0) + y_1`` (``f`` defaults to the
    identity). Returns ``(estimate, standard_error)``.
    """
    rng = np.random.default_rng(seed)
    x0 = np.asarray(q_sampler(rng, L), dtype=float).reshape(L, -1)
    z = x0 if f is None else np.asarray(f(gamma, x0), dtype=float)
    y = noise.sample(gamma, z, rng)
    i1 = noise.score_contribution(np.broadcast_to(np.asarray(delta_f(x0), dtype=float), x0.shape), y)
    phi = np.asarray(observable(z + y.embedded), dtype=float).reshape(L)
    _check_finite(i1, "score term", 1)
    _check_finite(phi, "observable", 1)
    vals = -phi * i1
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(L))
