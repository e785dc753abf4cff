"""Command-line front end.

    crossmarket validate --config CONFIG
    crossmarket run [--config CONFIG] [--seed N] [--out DIR]
    crossmarket stats INPUT [--out DIR] [--report FILE] [--lags L]
    crossmarket reproduce --figure {fig1..fig5,table2,table3} [--seed N] [--out DIR]

CONFIG is a TOML path or the name of a bundled config.  Outputs default to
``$CROSSMARKET_OUT`` (or ``./runs``).  Exit codes: 0 success, 1 usage,
2 configuration, 3 runtime or input failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import BUNDLED, ConfigInvalid, SimConfig, load_bundled, load_config
from .report import InputError, build_report, load_input

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
OUT_ENV = "CROSSMARKET_OUT"

# figure id -> (bundled configs, files of interest in the stats output)
FIGURES = {
    "fig1": (("default",), ("basis_series.csv", "basis_daily.csv")),
    "fig2": (("default",), ("basis_hist.csv", "report.txt")),
    "fig3": (("default",), ("spread_hist.csv",)),
    "fig4": (("default",), ("return_hist.csv",)),
    "fig5": (("default",), ("acf.csv",)),
    "table2": (("default",), ("report.txt",)),
    "table3": (("table3_sim1", "table3_sim2"), ("report.txt", "acf.csv", "basis_hist.csv")),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {v}")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crossmarket", description="Stock and index futures cross-market simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check a config file")
    v.add_argument("--config", required=True, help="TOML path or bundled name")

    r = sub.add_parser("run", help="run one simulation and write its logs")
    r.add_argument("--config", default="default", help="TOML path or bundled name")
    r.add_argument("--seed", type=_seed, help="override run.seed")
    r.add_argument("--out", help="output directory")
    r.add_argument("--no-stats", action="store_true", help="skip the statistics report")
    r.add_argument("--lags", type=_positive, default=200)

    s = sub.add_parser("stats", help="statistics report from logs or a CSV series")
    s.add_argument("input", help="run directory, or CSV with (step, price) or (step, F, S)")
    s.add_argument("--out", help="directory for report and histogram CSVs")
    s.add_argument("--report", help="also write the text report to this file")
    s.add_argument("--lags", type=_positive, default=200)

    rp = sub.add_parser("reproduce", help="regenerate the data behind a figure or table")
    rp.add_argument("--figure", required=True, help=", ".join(FIGURES))
    rp.add_argument("--seed", type=_seed)
    rp.add_argument("--out", help="output directory")
    rp.add_argument("--lags", type=_positive, default=200)
    return p


def resolve_config(ref: str) -> SimConfig:
    if ref in BUNDLED:
        return load_bundled(ref)
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {ref}")
    return load_config(path)


def _out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _simulate(cfg: SimConfig, seed: int | None, out: Path, lags: int, with_stats: bool) -> dict:
    from .engine import run as run_engine

    t0 = time.perf_counter()
    rec = run_engine(cfg, seed)
    elapsed = time.perf_counter() - t0
    o = cfg.output
    rec.write(out, trades=o.trades, quotes=o.quotes, wealth=o.wealth)
    summary = {"out": str(out), "seed": rec.seed, "steps": rec.steps, "trades": len(rec.trades),
               "seconds": round(elapsed, 1), "checks": rec.checks}
    if with_stats:
        rep = build_report(load_input(out), lags=lags)
        rep.write(out / "stats")
    return summary


def cmd_validate(args) -> int:
    cfg = resolve_config(args.config)
    print(f"{args.config}: ok ({cfg.run.days} days x {cfg.run.steps_per_day} steps, "
          f"{cfg.stocks.count} stocks)")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = resolve_config(args.config)
    seed = cfg.run.seed if args.seed is None else args.seed
    out = Path(args.out) if args.out else _out_root() / f"{Path(args.config).stem}-seed{seed}"
    summary = _simulate(cfg, seed, out, args.lags, not args.no_stats)
    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK


def cmd_stats(args) -> int:
    rep = build_report(load_input(args.input), lags=args.lags)
    text = rep.to_text()
    if args.out:
        rep.write(args.out)
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text, encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.figure not in FIGURES:
        raise UsageError(f"unknown figure id {args.figure!r}; valid ids: {', '.join(FIGURES)}")
    names, files = FIGURES[args.figure]
    root = Path(args.out) if args.out else _out_root() / args.figure
    for name in names:
        cfg = load_bundled(name)
        out = root / name
        summary = _simulate(cfg, args.seed, out, args.lags, True)
        print(json.dumps(summary, default=str))
        for f in files:
            print(f"  {out / 'stats' / f}")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "stats": cmd_stats, "reproduce": cmd_reproduce}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"crossmarket: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigInvalid as exc:
        print(f"crossmarket: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"crossmarket: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command in ("validate", "run") else EXIT_RUNTIME
    except (InputError, OSError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"crossmarket: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
