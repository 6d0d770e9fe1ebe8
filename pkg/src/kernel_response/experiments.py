"""Experiment drivers behind the command line: gamma sweeps, convergence studies, densities.

Configurations are plain dicts (JSON documents on the command line). Every
driver returns rows as dicts so callers can write CSV or inspect them.
"""
from __future__ import annotations

import math
import time
from typing import Iterable, Iterator, Optional

import numpy as np

from .estimators import ErgodicConfig, FiniteTimeConfig, ergodic_estimator, finite_time_estimator
from .models import N_LAYERS, build_ar1, build_network, build_tent, tent_map
from .oracle import GridDensity, ensemble_mean, stationary_density
from .parallel import split, unit_rngs

DEFAULTS = {
    "tent": {"estimator": "ergodic", "sigma": 0.1, "W": 7, "L": 10**6, "M_pre": 1000,
             "gamma": {"start": 2.5, "stop": 3.5, "count": 11}},
    "ar1": {"estimator": "ergodic", "sigma": 0.3, "a": 0.5, "W": 30, "L": 10**6, "M_pre": 1000,
            "gamma": {"start": 0.0, "stop": 0.0, "count": 1}},
    "network": {"estimator": "finite", "sigma": 1.5, "T": N_LAYERS, "L": 10**4, "noise_mode": "foliated",
                "form": "chart", "gamma": {"start": -0.2, "stop": 0.2, "count": 9}},
}
COMMON = {"seed": 0, "repetitions": 1, "threads": 1, "chains": None, "centralize": True}


class ConfigError(ValueError):
    pass


def resolve_config(config: dict) -> dict:
    """Fill defaults for the chosen model and validate before any computation."""
    cfg = dict(config)
    model = cfg.get("model", "tent")
    if model not in DEFAULTS:
        raise ConfigError(f"unknown model {model!r}; choose from {sorted(DEFAULTS)}")
    out = {"model": model, **COMMON, **DEFAULTS[model]}
    for k, v in cfg.items():
        if v is None and k in out:
            continue
        if k == "gamma" and isinstance(v, dict):
            out["gamma"] = {**out["gamma"], **v}
        else:
            out[k] = v
    est = out["estimator"]
    if est not in ("finite", "ergodic"):
        raise ConfigError(f"estimator must be 'finite' or 'ergodic', got {est!r}")
    if model == "network" and est != "finite":
        raise ConfigError("the network is a finite-horizon problem; use estimator 'finite'")
    if est == "finite" and model != "network" and "T" not in out:
        raise ConfigError("finite-time runs need T")
    if out.get("noise_mode", "foliated") != "none" and not out["sigma"] > 0:
        raise ConfigError("sigma must be positive")
    g = out["gamma"]
    if int(g["count"]) < 1:
        raise ConfigError("gamma.count must be >= 1")
    if int(out["repetitions"]) < 1:
        raise ConfigError("repetitions must be >= 1")
    if est == "ergodic":
        ErgodicConfig(W=int(out["W"]), L=int(out["L"]), M_pre=int(out["M_pre"]), chains=out["chains"])
    else:
        FiniteTimeConfig(T=int(out["T"]), L=int(out["L"]))
    return out


def gamma_grid(g: dict) -> np.ndarray:
    return np.linspace(float(g["start"]), float(g["stop"]), int(g["count"]))


def rep_seed(seed: int, index: int) -> int:
    """Independent, reproducible seed for the ``index``-th (gamma, repetition) run."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0] >> np.uint64(1))


def _problem(cfg: dict, gamma: float):
    model = cfg["model"]
    if model == "tent":
        return build_tent(gamma, float(cfg["sigma"]))
    if model == "ar1":
        return build_ar1(float(cfg["a"]), gamma, float(cfg["sigma"]))
    return build_network(gamma, float(cfg["sigma"]), cfg.get("noise_mode", "foliated"), cfg.get("form", "chart"),
                         T=int(cfg["T"]))


def run_point(cfg: dict, gamma: float, seed: int) -> dict:
    """One estimator run at one gamma."""
    t0 = time.perf_counter()
    prob = _problem(cfg, gamma)
    row = {"gamma": gamma}
    if prob.noise is None:
        mean, se = ensemble_mean(prob, int(cfg["T"]), gamma, int(cfg["L"]), seed, workers=cfg["threads"])
        row.update(phi_avg=mean, dphi_avg=math.nan, se_phi=se, se_dphi=math.nan)
    elif cfg["estimator"] == "ergodic":
        ec = ErgodicConfig(W=int(cfg["W"]), L=int(cfg["L"]), gamma=gamma, M_pre=int(cfg["M_pre"]), seed=seed,
                           chains=cfg["chains"], centralize=bool(cfg["centralize"]), workers=cfg["threads"])
        r = ergodic_estimator(prob.system, prob.noise, prob.observable, ec)
        row.update(phi_avg=r.phi_avg, dphi_avg=r.dphi_avg, se_phi=r.se_phi, se_dphi=r.se_dphi)
    else:
        fc = FiniteTimeConfig(T=int(cfg["T"]), L=int(cfg["L"]), gamma=gamma, seed=seed,
                              centralize=bool(cfg["centralize"]), workers=cfg["threads"])
        r = finite_time_estimator(prob.system, prob.noise, prob.observable, prob.init, fc)
        row.update(phi_avg=r.phi_avg, dphi_avg=r.dphi_avg, se_phi=r.se_phi, se_dphi=r.se_dphi)
        c = r.correction_terms
        if c is not None and c.available:
            row.update(delta_phi_term=c.delta_phi_term, initial_score_term=c.initial_score_term,
                       total=r.total, se_total=r.se_total)
    row["wall_time_seconds"] = time.perf_counter() - t0
    return row


SWEEP_COLUMNS = ["gamma", "repetition", "phi_avg", "dphi_avg", "se_phi", "se_dphi",
                 "delta_phi_term", "initial_score_term", "total", "se_total", "wall_time_seconds"]


class PointError(RuntimeError):
    def __init__(self, gamma, cause):
        super().__init__(f"estimator failed at gamma={gamma}: {cause}")
        self.gamma = gamma


def run_sweep(config: dict) -> Iterator[dict]:
    """Yield one row per (gamma, repetition), in order."""
    cfg = resolve_config(config)
    index = 0
    for gamma in gamma_grid(cfg["gamma"]):
        for rep in range(int(cfg["repetitions"])):
            try:
                row = run_point(cfg, float(gamma), rep_seed(cfg["seed"], index))
            except Exception as exc:
                raise PointError(float(gamma), exc) from exc
            row["repetition"] = rep
            index += 1
            yield row


def secant_consistency(rows: Iterable[dict], n_se: float = 3.0) -> list[dict]:
    """Compare each interior ``dphi_avg`` with the centered secant of ``phi_avg``."""
    rows = sorted(rows, key=lambda r: r["gamma"])
    out = []
    for lo, mid, hi in zip(rows, rows[1:], rows[2:]):
        dg = hi["gamma"] - lo["gamma"]
        secant = (hi["phi_avg"] - lo["phi_avg"]) / dg
        se = math.sqrt(mid["se_dphi"] ** 2 + (hi["se_phi"] ** 2 + lo["se_phi"] ** 2) / dg**2)
        out.append({"gamma": mid["gamma"], "dphi": mid["dphi_avg"], "secant": secant, "se": se,
                    "ok": abs(mid["dphi_avg"] - secant) <= n_se * se})
    return out


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def run_convergence_study(config: dict, axis: str, values: Iterable[int]) -> tuple[list[dict], float]:
    """Repeat the estimator at a single gamma over a range of ``L`` or ``W``.

    Returns rows ``{axis, value, mean_dphi, std_dphi, repetitions}`` and the
    fitted log-log slope of ``std_dphi`` against the axis value.
    """
    if axis not in ("L", "W"):
        raise ConfigError("axis must be 'L' or 'W'")
    base = dict(config)
    base.setdefault("repetitions", 10)
    reps = int(base["repetitions"])
    if reps < 10:
        raise ConfigError("a convergence study needs at least 10 repetitions per point")
    values = [int(v) for v in values]
    rows = []
    for vi, v in enumerate(values):
        cfg = resolve_config({**base, axis: v, "repetitions": reps})
        gamma = float(gamma_grid(cfg["gamma"])[0])
        d = np.array([run_point(cfg, gamma, rep_seed(cfg["seed"], vi * 1_000_003 + r))["dphi_avg"]
                      for r in range(reps)])
        rows.append({"axis": axis, "value": v, "mean_dphi": float(d.mean()), "std_dphi": float(d.std(ddof=1)),
                     "repetitions": reps})
    slope = loglog_slope([r["value"] for r in rows], [r["std_dphi"] for r in rows])
    return rows, slope


# ---------------------------------------------------------------- densities


def orbit_histogram(problem, gamma: float, L: int, bins: int = 256, M_pre: int = 1000, seed: int = 0,
                    chains: int = 64, lo: float = 0.0, hi: float = 1.0, chunk: int = 4096) -> GridDensity:
    """Normalized histogram of ``L`` post-spin-up orbit points of a 1-D system.

    ``chains`` orbits run in lockstep, each with its own spin-up; a
    ``noise=None`` problem runs the deterministic map.
    """
    sys, noise, _, start = problem
    if sys.dimension != 1:
        raise ValueError("densities are only available for 1-D systems")
    if L % chains:
        raise ValueError("L must be a multiple of chains")
    rng = unit_rngs(seed, 1)[0]
    per = L // chains
    x = np.asarray(start.sample(gamma, rng, chains), dtype=float).reshape(chains, 1)

    def advance(x):
        z = sys.f(gamma, x)
        if noise is not None:
            z = z + noise.sample(gamma, z, rng).embedded
        return sys.wrap(z)

    for _ in range(M_pre):
        x = advance(x)
    counts = np.zeros(bins)
    width = (hi - lo) / bins
    for size in split(per, chunk):
        buf = np.empty((size, chains))
        for j in range(size):
            x = advance(x)
            buf[j] = x[:, 0]
        idx = np.clip(((buf - lo) / width).astype(np.int64), 0, bins - 1)
        counts += np.bincount(idx.ravel(), minlength=bins)
    return GridDensity(counts / (L * width), lo, hi)


def run_density(model: str = "tent", sigmas=(0.05, 0.1, 0.2), L: int = 10**7, gamma: Optional[float] = None,
                bins: int = 256, N: int = 4096, seed: int = 0, M_pre: int = 1000, chains: int = 64) -> list[dict]:
    """Orbit histogram and grid stationary density for each noise scale.

    ``sigma = 0`` gives the noise-free orbit histogram (no grid density).
    """
    if model != "tent":
        raise ConfigError("run_density supports the 1-D tent model")
    gamma = 3.0 if gamma is None else float(gamma)
    out = []
    for k, sigma in enumerate(sigmas):
        sigma = float(sigma)
        prob = build_tent(gamma, sigma if sigma > 0 else 1.0)
        if sigma == 0:
            prob = prob._replace(noise=None)
        hist = orbit_histogram(prob, gamma, L, bins, M_pre, rep_seed(seed, k), chains)
        grid = None
        if sigma > 0:
            grid = stationary_density(lambda x: tent_map(gamma, x), sigma, N).coarsen(bins)
        out.append({"sigma": sigma, "histogram": hist, "grid": grid})
    return out


def density_distances(results: list[dict]) -> dict:
    """L1 distances: histogram vs grid per sigma, and each histogram vs the smallest-sigma one."""
    ref = min(results, key=lambda r: r["sigma"])
    out = {}
    for r in results:
        entry = {"to_reference": r["histogram"].l1_distance(ref["histogram"])}
        if r["grid"] is not None:
            entry["hist_vs_grid"] = r["histogram"].l1_distance(r["grid"])
        out[r["sigma"]] = entry
    return out
