"""Command line: ``kernel-response {sweep,converge,density,recommend,selftest}``.

Results go out as CSV with ``#`` comment headers carrying the fully resolved
configuration. Precedence: flags > ``KR_SEED`` > config file > defaults.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

from . import costmodel
from .experiments import (
    SWEEP_COLUMNS,
    ConfigError,
    density_distances,
    resolve_config,
    run_convergence_study,
    run_density,
    run_sweep,
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def load_config(path: Optional[str]) -> dict:
    """Read a JSON document, or the ``# config:`` header line of a CSV this tool wrote."""
    if not path:
        return {}
    with open(path) as fh:
        text = fh.read()
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    return json.loads(text)


def _csv_list(s: str, cast=float):
    return [cast(v) for v in s.split(",") if v.strip()]


def _add_model_flags(p):
    p.add_argument("--config", help="JSON config file (or a CSV written by this tool)")
    p.add_argument("--model", choices=["tent", "network", "ar1"])
    p.add_argument("--estimator", choices=["finite", "ergodic"])
    p.add_argument("--gamma-start", type=float)
    p.add_argument("--gamma-stop", type=float)
    p.add_argument("--gamma-count", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--noise-mode", choices=["foliated", "full", "none"])
    p.add_argument("--form", choices=["chart", "original"])
    p.add_argument("--a", type=float, help="AR(1) contraction")
    p.add_argument("--W", type=int, help="decorrelation window")
    p.add_argument("--L", type=int, help="orbit length or number of paths")
    p.add_argument("--M-pre", dest="M_pre", type=int, help="spin-up steps")
    p.add_argument("--T", type=int, help="finite horizon")
    p.add_argument("--chains", type=int)
    p.add_argument("--no-centralize", dest="centralize", action="store_false", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--threads", type=int, help="worker cap (default: available cores)")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")


def _merged_config(args) -> dict:
    cfg = load_config(args.config)
    if "KR_SEED" in os.environ:
        cfg["seed"] = int(os.environ["KR_SEED"])
    for key in ("model", "estimator", "sigma", "noise_mode", "form", "a", "W", "L", "M_pre", "T", "chains",
                "centralize", "seed", "repetitions", "threads"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    g = dict(cfg.get("gamma", {}))
    for key in ("start", "stop", "count"):
        v = getattr(args, f"gamma_{key}", None)
        if v is not None:
            g[key] = v
    if g:
        cfg["gamma"] = g
    if cfg.get("threads") is None:
        cfg["threads"] = os.cpu_count() or 1
    return cfg


class _Out:
    def __init__(self, path):
        self.fh = open(path, "w") if path else sys.stdout

    def line(self, text):
        self.fh.write(text + "\n")
        self.fh.flush()

    def close(self):
        if self.fh is not sys.stdout:
            self.fh.close()


def _header(out, command, cfg):
    out.line(f"# kernel-response {command}")
    out.line("# config: " + json.dumps(cfg, sort_keys=True))


def cmd_sweep(args) -> int:
    cfg = resolve_config(_merged_config(args))
    out = _Out(args.output or cfg.get("output"))
    try:
        _header(out, "sweep", cfg)
        out.line(",".join(SWEEP_COLUMNS))
        for row in run_sweep(cfg):
            out.line(",".join(_fmt(row.get(c)) for c in SWEEP_COLUMNS))
    except Exception as exc:
        out.line(f"# ERROR: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        out.close()
    return 0


def cmd_converge(args) -> int:
    cfg = _merged_config(args)
    cfg["repetitions"] = args.repetitions or cfg.get("repetitions") or 10
    values = _csv_list(args.values, int)
    out = _Out(args.output or cfg.get("output"))
    try:
        resolved = resolve_config(cfg)
        _header(out, f"converge axis={args.axis} values={values}", resolved)
        rows, slope = run_convergence_study(resolved, args.axis, values)
        out.line("axis,value,mean_dphi,std_dphi,repetitions")
        for r in rows:
            out.line(",".join(_fmt(r[c]) for c in ("axis", "value", "mean_dphi", "std_dphi", "repetitions")))
        out.line(f"# slope,{slope!r}")
    except Exception as exc:
        out.line(f"# ERROR: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        out.close()
    return 0


def cmd_density(args) -> int:
    seed = int(os.environ.get("KR_SEED", args.seed))
    cfg = {"model": args.model, "sigmas": _csv_list(args.sigmas), "L": args.L, "gamma": args.gamma,
           "bins": args.bins, "N": args.N, "seed": seed}
    out = _Out(args.output)
    try:
        _header(out, "density", cfg)
        res = run_density(args.model, cfg["sigmas"], args.L, args.gamma, args.bins, args.N, seed)
        for s, d in density_distances(res).items():
            out.line(f"# l1 sigma={s!r} " + " ".join(f"{k}={v!r}" for k, v in d.items()))
        out.line("sigma,bin_center,histogram,grid")
        for r in res:
            h = r["histogram"]
            g = r["grid"].weights if r["grid"] is not None else [None] * h.N
            for c, hv, gv in zip(h.centers, h.weights, g):
                out.line(f"{_fmt(r['sigma'])},{_fmt(float(c))},{_fmt(float(hv))},{_fmt(None if gv is None else float(gv))}")
    except Exception as exc:
        out.line(f"# ERROR: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        out.close()
    return 0


def cmd_recommend(args) -> int:
    if (args.delta_gamma is None) == (args.sigma is None):
        print("error: give exactly one of --delta-gamma (approximating a deterministic system) "
              "or --sigma (intrinsic noise)", file=sys.stderr)
        return 2
    try:
        if args.sigma is not None:
            rec = costmodel.recommend_intrinsic(args.eps, args.theta, args.sigma)
            case = "intrinsic noise"
        else:
            rec = costmodel.recommend_approximation(args.eps, args.theta, args.delta_gamma)
            case = "noise added to approximate a deterministic system"
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"case: {case}")
    print(f"W = {rec.W}")
    print(f"sigma = {rec.sigma:.6g}")
    print(f"L = {rec.L}")
    for k, v in rec.breakdown.items():
        print(f"predicted {k} error ~ {v:.3g}")
    print("note: order-of-magnitude guidance only; all constants in the error model are set to 1")
    return 0


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(only=args.only, echo=True)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernel-response", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="gamma sweep of Phi_avg and its derivative")
    _add_model_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("converge", help="spread of the derivative versus L or W")
    _add_model_flags(p)
    p.add_argument("--axis", choices=["L", "W"], required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("density", help="orbit histograms and grid stationary densities")
    p.add_argument("--model", default="tent", choices=["tent"])
    p.add_argument("--sigmas", default="0.05,0.1,0.2")
    p.add_argument("--L", type=int, default=10**7)
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--bins", type=int, default=256)
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("recommend", help="rough choice of W, sigma, L for a target error")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--delta-gamma", type=float)
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--only", type=int, action="append", help="criterion number (repeatable)")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
