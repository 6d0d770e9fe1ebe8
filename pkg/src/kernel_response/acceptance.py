"""Acceptance checks with fixed sizes, seeds and tolerances.

Each ``criterion_*`` function runs one end-to-end check and returns a
:class:`Check`. ``tests/test_acceptance.py`` asserts on them and
``kernel-response selftest`` prints them.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .estimators import ErgodicConfig, FiniteTimeConfig, ergodic_estimator, finite_time_estimator, one_step_response
from .experiments import density_distances, loglog_slope, rep_seed, run_density
from .models import build_ar1, build_network, build_tent, tent_map
from .noise import DirectionalGaussian, IsotropicGaussian
from .oracle import FDOracleConfig, ensemble_mean, fd_ensemble_response, grid_linear_response
from .stats import LagCrossAccumulator, naive_lag_sum


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail}"


def _within(value, ref, se, k=3.0):
    return abs(value - ref) <= k * se


def criterion_1() -> Check:
    """AR(1) ergodic response equals 1/(1-a) = 2 within 3 SE, under 10 s."""
    p = build_ar1(a=0.5, gamma=0.0, sigma=0.3)
    cfg = ErgodicConfig(W=30, L=10**6, M_pre=1000, gamma=0.0, seed=101, workers=1)
    t0 = time.perf_counter()
    r = ergodic_estimator(p.system, p.noise, p.observable, cfg)
    elapsed = time.perf_counter() - t0
    ok = _within(r.dphi_avg, 2.0, r.se_dphi) and elapsed < 10.0
    return Check(1, "AR(1) analytic exactness", ok,
                 f"dphi={r.dphi_avg:.5f} se={r.se_dphi:.5f} target=2 time={elapsed:.2f}s (<10s)")


def criterion_2() -> Check:
    """Tent map at gamma=3, sigma=0.1, W=7, L=1e6 against the grid oracle."""
    p = build_tent(3.0, 0.1)
    r = ergodic_estimator(p.system, p.noise, p.observable,
                          ErgodicConfig(W=7, L=10**6, gamma=3.0, seed=202))
    ref = grid_linear_response(tent_map, 3.0, 0.1, lambda x: x, N=4096, delta_gamma=1e-3)
    ok = _within(r.dphi_avg, ref, r.se_dphi)
    return Check(2, "tent map vs grid oracle", ok,
                 f"ergodic={r.dphi_avg:.5f} se={r.se_dphi:.5f} grid={ref:.5f} |diff|/se={abs(r.dphi_avg - ref) / r.se_dphi:.2f}")


def _tent_runs(W, L, reps, seed):
    p = build_tent(3.0, 0.1)
    out = []
    for k in range(reps):
        r = ergodic_estimator(p.system, p.noise, p.observable,
                              ErgodicConfig(W=W, L=L, gamma=3.0, seed=rep_seed(seed, k)))
        out.append((r.diagnostics["dphi_centralized"], r.diagnostics["dphi_uncentralized"]))
    return np.array(out)


def criterion_3() -> Check:
    """std of the tent derivative over 10 runs scales like L^-1/2."""
    Ls = [10**3, 10**4, 10**5, 10**6]
    stds = [float(np.std(_tent_runs(7, L, 10, 300 + i)[:, 0], ddof=1)) for i, L in enumerate(Ls)]
    slope = loglog_slope(Ls, stds)
    ok = -0.6 <= slope <= -0.4
    return Check(3, "sampling-error scaling in L", ok,
                 f"slope={slope:.3f} in [-0.6,-0.4]; std={['%.2e' % s for s in stds]}")


def criterion_4() -> Check:
    """std grows like W^1/2 with centralization and faster than W^0.8 without."""
    Ws = [1, 2, 4, 8, 16, 32, 64]
    runs = [_tent_runs(W, 10**5, 10, 400 + i) for i, W in enumerate(Ws)]
    std_c = [float(np.std(r[:, 0], ddof=1)) for r in runs]
    std_u = [float(np.std(r[:, 1], ddof=1)) for r in runs]
    sc, su = loglog_slope(Ws, std_c), loglog_slope(Ws, std_u)
    ok = 0.35 <= sc <= 0.65 and su > 0.8
    return Check(4, "window scaling in W", ok,
                 f"centralized slope={sc:.3f} in [0.35,0.65]; uncentralized slope={su:.3f} > 0.8")


def criterion_5() -> Check:
    """Mean score contribution is statistically zero for every shipped model at L=1e5."""
    L = 10**5
    rows = []
    for name, p, gamma in (("tent", build_tent(3.0, 0.1), 3.0), ("ar1", build_ar1(0.5, 0.0, 0.3), 0.0)):
        r = ergodic_estimator(p.system, p.noise, p.observable, ErgodicConfig(W=7, L=L, gamma=gamma, seed=505))
        d = r.diagnostics
        rows.append((name, d["score_mean"], d["score_std"] / math.sqrt(d["score_count"])))
    for mode in ("foliated", "full"):
        p = build_network(0.0, 1.5, mode, "chart")
        r = finite_time_estimator(p.system, p.noise, p.observable, p.init,
                                  FiniteTimeConfig(T=50, L=L, gamma=0.0, seed=506))
        d = r.diagnostics
        means, stds = d["score_step_mean"], d["score_step_std"]
        # pooled over the 50 steps: the per-step terms are uncorrelated martingale increments
        pooled_mean = float(means.mean())
        pooled_se = float(np.sqrt(np.mean(stds**2)) / math.sqrt(L * means.size))
        rows.append((f"network-{mode}", pooled_mean, pooled_se))
    ok = all(abs(m) <= 3 * se for _, m, se in rows)
    return Check(5, "free centralization", ok,
                 "; ".join(f"{n}: |mean|/se={abs(m) / se:.2f}" for n, m, se in rows) + " (<= 3)")


def criterion_6() -> Check:
    """Chart-form network: estimator (main + corrections) vs common-random-number finite differences."""
    parts = []
    ok = True
    for k, sigma in enumerate((0.5, 1.5)):
        p = build_network(0.0, sigma, "foliated", "chart")
        t0 = time.perf_counter()
        r = finite_time_estimator(p.system, p.noise, p.observable, p.init,
                                  FiniteTimeConfig(T=50, L=10**4, gamma=0.0, seed=600 + k))
        elapsed = time.perf_counter() - t0
        fd, se_fd = fd_ensemble_response(lambda g, s=sigma: build_network(g, s, "foliated", "chart"), 50,
                                         FDOracleConfig(delta_gamma=0.05, L=10**4, seed=650 + k))
        c = r.correction_terms
        se = math.hypot(r.se_total, se_fd)
        good = c.delta_phi_term == -9.0 and _within(r.total, fd, se)
        ok &= good
        parts.append(f"sigma={sigma}: kd={r.total:.3f} (main {r.dphi_avg:.3f}, dPhi {c.delta_phi_term:g}, "
                     f"init {c.initial_score_term:.3f}) fd={fd:.3f} comb.se={se:.3f} time={elapsed:.2f}s")
    return Check(6, "network finite-time vs finite differences", ok, "; ".join(parts))


def _sweep_phi(mode, sigma, gammas, L, seed):
    out = []
    for k, g in enumerate(gammas):
        p = build_network(g, sigma, mode, "chart")
        out.append(ensemble_mean(p, 50, g, L, rep_seed(seed, k))[0])
    return np.array(out)


def criterion_7() -> Check:
    """Foliated noise perturbs Phi_avg less than full noise; equal score second moments."""
    gammas = np.linspace(-0.2, 0.2, 9)
    L = 10**4
    base = _sweep_phi("none", 0.5, gammas, L, 700)
    fol = _sweep_phi("foliated", 0.5, gammas, L, 700)
    full = _sweep_phi("full", 0.5, gammas, L, 700)
    dg = gammas[1] - gammas[0]
    d_fol = float(np.sum(np.abs(fol - base)) * dg)
    d_full = float(np.sum(np.abs(full - base)) * dg)

    rng = np.random.default_rng(707)
    n, m, sigma = 10**5, 9, 0.5
    ones = np.ones((n, m))
    iso = IsotropicGaussian(sigma, m)
    dirn = DirectionalGaussian.uniform_diagonal(sigma, m)
    e_full = float(np.mean(iso.score_contribution(ones, iso.sample(0.0, ones, rng)) ** 2))
    e_fol = float(np.mean(dirn.score_contribution(ones, dirn.sample(0.0, ones, rng)) ** 2))
    ratio = e_fol / e_full
    ok = d_fol < d_full and abs(ratio - 1) <= 0.05
    return Check(7, "foliated vs full-dimensional noise", ok,
                 f"L1 deviation foliated={d_fol:.4f} < full={d_full:.4f}; E[I^2] ratio={ratio:.4f} "
                 f"(expected M/sigma^2={m / sigma**2:g})")


def criterion_8() -> Check:
    """One-step mean shift gives 1; lag accumulator equals the naive double sum."""
    noise = IsotropicGaussian(0.3, 1)
    est, se = one_step_response(lambda rng, n: np.zeros((n, 1)), noise, lambda x: np.ones_like(x),
                                lambda x: x[:, 0], 10**6, seed=808)
    rng = np.random.default_rng(809)
    W, n_terms = 16, 10**4
    scores = rng.standard_normal(n_terms + W)
    phis = rng.random(n_terms + W)
    acc = LagCrossAccumulator(W, 1)
    for lo in range(0, n_terms + W - 1, 977):
        hi = min(lo + 977, n_terms + W - 1)
        acc.update(scores[lo:hi], phis[lo:hi])
    a_ref, b_ref = naive_lag_sum(scores, phis, W, n_terms)
    rel = max(abs(acc.a[0] - a_ref) / abs(a_ref), abs(acc.b[0] - b_ref) / abs(b_ref))
    ok = _within(est, 1.0, se) and rel <= 1e-10 and acc.completed == n_terms
    return Check(8, "micro-scale structural checks", ok,
                 f"one-step={est:.4f} se={se:.4f} target=1; accumulator rel.err={rel:.1e} (<=1e-10)")


def criterion_9() -> Check:
    """Tent histograms (L=1e7) vs grid densities, and monotone approach as sigma shrinks."""
    res = run_density("tent", (0.05, 0.1, 0.2), L=10**7, gamma=3.0, bins=256, N=4096, seed=909)
    d = density_distances(res)
    hv = d[0.1]["hist_vs_grid"]
    ok = hv <= 0.02 and d[0.1]["to_reference"] < d[0.2]["to_reference"]
    return Check(9, "density reproduction", ok,
                 f"L1(hist, grid) at sigma=0.1: {hv:.4f} (<=0.02); L1 to sigma=0.05 histogram: "
                 f"sigma=0.1 {d[0.1]['to_reference']:.4f} < sigma=0.2 {d[0.2]['to_reference']:.4f}")


CRITERIA: dict[int, Callable[[], Check]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def run_all(only: Optional[list[int]] = None, echo: bool = False) -> list[Check]:
    results = []
    for k, fn in CRITERIA.items():
        if only and k not in only:
            continue
        try:
            c = fn()
        except Exception as exc:  # a crash is a failed criterion, reported like the others
            c = Check(k, fn.__doc__.splitlines()[0], False, f"error: {exc!r}")
        results.append(c)
        if echo:
            print(c.line(), flush=True)
    return results
