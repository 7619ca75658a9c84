"""Command-line scenario runner.

    nhcse run [SCENARIO] [--config FILE] [--out DIR] [--seed N] [--no-plots]
    nhcse sweep [SCENARIO] [--config FILE] --param NAME --values V1,V2,... [--out DIR]
    nhcse list-scenarios

``NHCSE_THREADS`` caps the BLAS threads and the sweep worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path

from . import scenarios
from .results import flatten, write_csv, write_json

# observables plotted by `sweep`, per scenario
SWEEP_PLOTS = {
    "fig2a": ["xi", "xi_oracle"], "fig2b": ["xi", "xi_oracle"], "fig2cd": ["xi", "xi_oracle"],
    "fig3cd": ["xi", "xi_hn_corrected", "xi_hn_literal"],
    "fig4": ["zigzag.lower", "zigzag.upper", "armchair.max_abs_gamma_eff"],
}


def _threads() -> int | None:
    v = os.environ.get("NHCSE_THREADS")
    if not v:
        return None
    n = int(v)
    if n < 1:
        raise ValueError("NHCSE_THREADS must be >= 1")
    return n


def _limit(n: int | None):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
    if args.scenario:
        cfg["scenario"] = args.scenario
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "no_plots", False):
        cfg["plots"] = False
    return cfg


def _error_summary(cfg, exc: Exception) -> dict:
    return {"scenario": cfg.get("scenario") if isinstance(cfg, dict) else None,
            "status": "error", "error": {"type": type(exc).__name__, "message": str(exc)}}


def write_result(result, out: Path, plots: bool = True) -> list[str]:
    """Persist a ScenarioResult; the only place run output touches the disk."""
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name, (header, rows) in sorted(result.tables.items()):
        write_csv(out / f"{name}.csv", header, rows)
        files.append(f"{name}.csv")
    for name, text in sorted(result.texts.items()):
        if text is not None:
            (out / name).write_text(text)
            files.append(name)
    if plots:
        from .plotting import render
        files += render(result, out)
    write_json(out / "summary.json", result.summary)
    return files + ["summary.json"]


def cmd_run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = {}
    try:
        cfg = _load_config(args)
        with _limit(_threads()):
            result = scenarios.run(cfg)
        write_result(result, out, plots=cfg.get("plots", True))
    except Exception as exc:  # noqa: BLE001 - any failure is reported in summary.json
        write_json(out / "summary.json", _error_summary(cfg, exc))
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if os.environ.get("NHCSE_DEBUG"):
            traceback.print_exc()
        return 2 if isinstance(exc, (scenarios.ConfigError, ValueError, OSError)) else 1
    print(f"wrote results to {out}")
    return 0


def parse_values(text: str) -> list:
    """Comma-separated values; numbers become int/float, the rest strings."""
    vals = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        try:
            vals.append(json.loads(tok))
        except json.JSONDecodeError:
            vals.append(tok)
    return vals


def sweep(cfg: dict, param: str, values: list, workers: int = 1) -> tuple[list, list]:
    """Run one scenario per value; returns ``(header, rows)``.

    Rows carry ``status`` (``ok``/``error``) and ``error``; observables
    are the scalar summary entries, keyed by dotted path.
    """
    if not values:
        return [param, "status", "error"], []
    # validate the base config and the parameter path before any computation
    base = scenarios.validate_config(cfg)
    for v in values:
        scenarios.set_param(base, param, v)

    def one(v):
        try:
            res = scenarios.run(scenarios.set_param(base, param, v))
            return "ok", "", flatten(res.summary)
        except Exception as exc:  # noqa: BLE001 - recorded per row
            return "error", f"{type(exc).__name__}: {exc}", {}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(one, values))
    else:
        outs = [one(v) for v in values]
    keys = sorted({k for _, _, f in outs for k in f} - {"scenario", "status"})
    header = [param, "status", "error"] + keys
    rows = [[v, st, err] + [f.get(k) for k in keys] for v, (st, err, f) in zip(values, outs)]
    return header, rows


def cmd_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg = _load_config(args)
        cfg["plots"] = False
        n = _threads()
        values = parse_values(args.values)
        workers = n if n and len(values) > 1 else 1
        with _limit(1 if workers > 1 else n):
            header, rows = sweep(cfg, args.param, values, workers)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    write_csv(out / "sweep.csv", header, rows)
    keys = [k for k in SWEEP_PLOTS.get(cfg.get("scenario"), []) if k in header]
    if rows and keys and not args.no_plots:
        from .plotting import plot_curve
        ok = [r for r in rows if r[1] == "ok"]
        if ok:
            curve = scenarios.Curve([r[0] for r in ok],
                                    {k: [r[header.index(k)] for r in ok] for k in keys},
                                    args.param, "observable", markers=True)
            plot_curve(curve, out / "sweep.svg")
    failed = sum(r[1] != "ok" for r in rows)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'} ({failed} failed)")
    return 0


def cmd_list(args) -> int:
    for name in scenarios.SCENARIOS:
        print(f"{name:14s} {scenarios.DESCRIPTIONS[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nhcse", description="Non-Hermitian chiral skin effect lab")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("scenario", nargs="?", choices=scenarios.SCENARIOS)
    r.add_argument("--config", help="JSON config file (overrides scenario defaults)")
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--seed", type=int, help="random seed for property suites")
    r.add_argument("--no-plots", action="store_true", help="skip SVG output")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="sweep one parameter")
    s.add_argument("scenario", nargs="?", choices=scenarios.SCENARIOS)
    s.add_argument("--config")
    s.add_argument("--param", required=True,
                   help="dotted config path, or 'gamma' for the profile strength")
    s.add_argument("--values", required=True, help="comma-separated list (may be empty)")
    s.add_argument("--out", default="sweep")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_sweep)
    ls = sub.add_parser("list-scenarios", help="list scenario names")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("run", "sweep") and not (args.scenario or args.config):
        print("error: give a scenario name or --config", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
