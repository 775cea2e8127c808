"""Command-line driver: simulate, analyze, invert, solve, verify, reproduce.

Exit codes: 0 success; 2 config schema violation (a machine-readable
JSON error object goes to stderr); 1 runtime failure (same JSON shape,
including the stage that failed).  All outputs embed the tool version
and the semantic config hash, and rerunning any command with the same
config produces byte-identical files regardless of worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import _config, _io, _recipes, _verify, analytic, pde, ratefn, sde, stats
from ._config import ConfigSchemaError
from ._recipes import DEFAULT_RATE, _f, write_csv, write_report
from ._version import __version__
from .errors import InsufficientDataError, KolError

FLAG_KEYS = ("seed", "eps", "samples", "dt", "t_max", "out", "workers")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kol",
        description=("waiting times of a mean-reverting diffusion under "
                     "state-dependent killing: sampling, PDE, and "
                     "Laplace-domain routes"),
    )
    p.add_argument("--version", action="version", version=f"kol {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON config file (published schema)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--eps", type=float, default=None,
                        help="drift strength")
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--tmax", type=float, default=None, dest="t_max")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--workers", type=int, default=None,
                        help="thread count (or env KOL_WORKERS)")

    add_common(sub.add_parser(
        "simulate", help="sample waiting times, write a dataset CSV"))

    sp = sub.add_parser(
        "analyze", help="histogram, survival curve, and tail report "
                         "for an existing dataset")
    sp.add_argument("dataset", help="dataset CSV written by `simulate`")
    add_common(sp)

    add_common(sub.add_parser(
        "analytic", help="closed-form and inverted waiting-time densities"))

    add_common(sub.add_parser(
        "pde", help="solve the killed Fokker-Planck equation"))

    add_common(sub.add_parser(
        "verify-specfun", help="run the special-function identity suite"))

    sp = sub.add_parser("reproduce", help="run a named end-to-end recipe")
    sp.add_argument("recipe", help="one of: " + ", ".join(
        sorted(set(_recipes.RECIPES))))
    add_common(sp)

    return p


def _emit_error(payload: dict) -> None:
    sys.stderr.write(json.dumps({"error": payload}, sort_keys=True) + "\n")


def _resolve_workers(resolved: dict) -> int:
    if resolved.get("workers") is not None:
        return int(resolved["workers"])
    env = os.environ.get("KOL_WORKERS", "").strip()
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ConfigSchemaError({
                "kind": "env-var",
                "path": ["KOL_WORKERS"],
                "message": f"expected an integer, got {env!r}",
            }) from None
        if w < 1:
            raise ConfigSchemaError({
                "kind": "env-var",
                "path": ["KOL_WORKERS"],
                "message": f"worker count must be >= 1, got {w}",
            })
        return w
    return 1


def _resolve(args, defaults: dict) -> dict:
    config = _config.load_config(args.config) if args.config else {}
    flags = {k: getattr(args, k, None) for k in FLAG_KEYS}
    return _config.resolve(defaults, config, flags)


def _out_dir(resolved: dict) -> str:
    out = resolved.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return out


# --- subcommand bodies -------------------------------------------------------

def _cmd_simulate(args) -> int:
    resolved = _resolve(args, {
        "eps": 0.0, "samples": 10_000, "dt": _recipes.DEFAULT_DT,
        "seed": 0, "rate": DEFAULT_RATE,
    })
    workers = _resolve_workers(resolved)
    out = _out_dir(resolved)
    data = _recipes._simulate(resolved, workers)
    digest = data.config_hash()
    pre = _recipes._prefix(out, "simulate", data.config.seed, digest)
    sde.write_dataset(data, f"{pre}-dataset.csv")
    print(f"{pre}-dataset.csv")
    print(f"samples={len(data)} censored={data.n_censored} "
          f"config_hash={digest[:16]}")
    return 0


def _cmd_analyze(args) -> int:
    resolved = _resolve(args, {"bin_width": stats.DEFAULT_BIN_WIDTH})
    out = _out_dir(resolved)
    data = sde.read_dataset(args.dataset)
    width = resolved["bin_width"]
    windows = resolved.get("windows") or {}

    digest = _io.json_digest({
        "analyze": {
            "dataset": data.config_hash(),
            "bin_width": width,
            "windows": windows,
        }
    })
    pre = _recipes._prefix(out, "analyze", data.config.seed, digest)

    hist = stats.histogram_pdf(data, bin_width=width)
    curve = stats.survival_curve(data, bin_width=width)
    write_csv(f"{pre}-pdf.csv", digest, _recipes.HISTOGRAM_HEADER,
              _recipes.histogram_rows(hist))
    write_csv(f"{pre}-survival.csv", digest, "t,survival",
              _recipes.survival_rows(curve))
    write_csv(f"{pre}-cdf-points.csv", digest,
              "plot_log_abscissa,plot_log_ordinate",
              _recipes.cdf_plot_rows(curve))

    body = {"dataset": os.path.basename(args.dataset),
            "bin_width": hist.bin_width,
            "n_samples": len(data), "n_censored": data.n_censored}
    try:
        tail = stats.detect_transition(
            curve, window=tuple(windows["transition"])
            if "transition" in windows else None)
        body["tail"] = tail.to_dict()
    except InsufficientDataError as e:
        body["tail"] = None
        body["tail_skipped"] = str(e)
    write_report(f"{pre}-report.json", digest, body)

    for suffix in ("pdf.csv", "survival.csv", "cdf-points.csv", "report.json"):
        print(f"{pre}-{suffix}")
    return 0


def _cmd_analytic(args) -> int:
    resolved = _resolve(args, {
        "eps": 1e-2, "seed": 0,
        "times": {"start": 0.1, "stop": 50.0, "count": 40, "spacing": "log"},
    })
    out = _out_dir(resolved)
    digest = _config.config_digest({"command": "analytic", **resolved})
    pre = _recipes._prefix(out, "analytic", int(resolved["seed"]), digest)

    tspec = resolved["times"]
    if tspec.get("spacing", "log") == "log":
        times = np.geomspace(tspec["start"], tspec["stop"], tspec["count"])
    else:
        times = np.linspace(tspec["start"], tspec["stop"], tspec["count"])
    rows = _recipes.analytic_series(float(resolved["eps"]), times)
    write_csv(f"{pre}-series.csv", digest,
              "t,n0_intermediate,n0_longtime,n_inverted,certified",
              (f"{_f(t)},{_f(a)},{_f(b)},{_f(v)},{ok}"
               for t, a, b, v, ok in rows))
    print(f"{pre}-series.csv")
    return 0


def _cmd_pde(args) -> int:
    resolved = _resolve(args, {
        "eps": 1e-2, "x0": 0.0, "rate": DEFAULT_RATE, "t_max": 50.0,
        "seed": 0,
    })
    out = _out_dir(resolved)
    digest = _config.config_digest({"command": "pde", **resolved})
    pre = _recipes._prefix(out, "pde", int(resolved.get("seed", 0)), digest)

    eps = float(resolved["eps"])
    gcfg = resolved.get("grid") or {}
    lo, hi = pde.default_domain(eps)
    grid = pde.FPGrid(
        x_min=float(gcfg.get("x_min", lo)),
        x_max=float(gcfg.get("x_max", hi)),
        n_nodes=int(gcfg.get("n_nodes", 1601)),
        dt=float(gcfg.get("dt", 1e-3)),
        t_max=float(gcfg.get("t_max", resolved["t_max"])),
        sigma0=gcfg.get("sigma0"),
    )
    params = sde.OUParams(eps=eps, x0=float(resolved.get("x0", 0.0)))
    rate = ratefn.rate_from_dict(resolved.get("rate", DEFAULT_RATE))
    snaps = tuple(resolved.get("snapshot_times") or ())
    sol = pde.solve_fokker_planck(params, rate, grid, snapshot_times=snaps)

    write_csv(f"{pre}-series.csv", digest, "t,survival,n",
              (f"{_f(t)},{_f(bn)},{_f(n)}"
               for t, bn, n in zip(sol.times, sol.big_n, sol.n)))
    files = [f"{pre}-series.csv"]
    for j, (t, x, f) in enumerate(sol.snapshots):
        path = f"{pre}-snapshot{j}.csv"
        write_csv(path, digest, f"# t={_f(t)}\nx,f",
                  (f"{_f(xi)},{_f(fi)}" for xi, fi in zip(x, f)))
        files.append(path)
    write_report(f"{pre}-diagnostics.json", digest,
                 {"diagnostics": sol.diagnostics,
                  "grid": {"x_min": grid.x_min, "x_max": grid.x_max,
                           "n_nodes": grid.n_nodes, "dt": grid.dt,
                           "t_max": grid.t_max}})
    files.append(f"{pre}-diagnostics.json")
    for f in files:
        print(f)
    return 0


def _cmd_verify_specfun(args) -> int:
    resolved = _resolve(args, {"seed": 0})
    out = _out_dir(resolved)
    digest = _config.config_digest({"command": "verify-specfun"})
    pre = _recipes._prefix(out, "verify-specfun", 0, digest)

    records = _verify.identity_checks()
    write_csv(f"{pre}-checks.csv", digest,
              "check,points,worst,tolerance,passed",
              (f"{r['check']},{r['points']},{_f(r['worst'])},"
               f"{_f(r['tolerance'])},{1 if r['passed'] else 0}"
               for r in records))
    for r in records:
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"{mark} {r['check']}: worst {r['worst']:.3e} "
              f"(tol {r['tolerance']:.0e}, {r['points']} points)")
    print(f"{pre}-checks.csv")
    failed = [r["check"] for r in records if not r["passed"]]
    if failed:
        raise KolError(f"identity checks failed: {', '.join(failed)}")
    return 0


def _cmd_reproduce(args) -> int:
    if args.recipe not in _recipes.RECIPES:
        raise ConfigSchemaError({
            "kind": "unknown-recipe",
            "path": ["recipe"],
            "message": f"unknown recipe {args.recipe!r}; known: "
                       + ", ".join(sorted(set(_recipes.RECIPES))),
        })
    resolved = _resolve(args, {})
    workers = _resolve_workers(resolved)
    out = _out_dir(resolved)
    cfg = {k: v for k, v in resolved.items() if k not in ("out", "workers")}
    result = _recipes.RECIPES[args.recipe](cfg, out, workers)
    for f in result["files"]:
        print(f)
    return 0


_COMMANDS = {
    "simulate": ("simulate", _cmd_simulate),
    "analyze": ("analyze", _cmd_analyze),
    "analytic": ("analytic", _cmd_analytic),
    "pde": ("pde", _cmd_pde),
    "verify-specfun": ("verify-specfun", _cmd_verify_specfun),
    "reproduce": ("reproduce", _cmd_reproduce),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    stage, body = _COMMANDS[args.command]
    try:
        return body(args)
    except ConfigSchemaError as e:
        _emit_error(e.payload)
        return 2
    except (KolError, OSError) as e:
        _emit_error({
            "kind": type(e).__name__,
            "stage": stage,
            "message": str(e),
        })
        return 1


if __name__ == "__main__":
    sys.exit(main())
