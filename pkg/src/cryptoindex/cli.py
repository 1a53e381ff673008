"""Command-line entry point: ``validate``, ``backtest``, ``weights`` and ``stats``."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from datetime import date
from pathlib import Path

from .analytics import format_report, format_report_csv, perf_report
from .composition import (
    compute_weights,
    format_composition_log,
    select_constituents,
)
from .config import ConfigError, RunConfig, read_config_file, resolve_config
from .engine import format_series, read_series, run_backtest
from .io import atomic_write_text
from .market_data import MarketHistory, load_history, read_snapshots
from .smoothing import adjusted_caps_on

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2

SERIES_FILE = "series.csv"
COMPOSITIONS_FILE = "compositions.csv"
DIAGNOSTICS_FILE = "diagnostics.txt"
REPORT_FILE = "report.txt"
REPORT_CSV_FILE = "report.csv"

# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "data": "data_path",
    "start": "start",
    "end": "end",
    "n": "n_constituents",
    "alpha": "alpha",
    "epsilon": "epsilon",
    "carry_forward_days": "carry_forward_days",
    "base_value": "base_value",
    "periods_per_year": "periods_per_year",
    "risk_free": "risk_free_rate",
    "reselect_monthly": "reselect_monthly",
    "out": "output_dir",
}


class UsageError(Exception):
    pass


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--data", help="market data CSV (date,coin,price,market_cap)")
    p.add_argument("--start", help="first index day, YYYY-MM-DD")
    p.add_argument("--end", help="last index day, YYYY-MM-DD")
    p.add_argument("--n", help="number of constituents (default 30)")
    p.add_argument("--alpha", help="EWMA decay per day (default ln2/14)")
    p.add_argument("--epsilon", help="EWMA weight truncation threshold (default 1e-10)")
    p.add_argument("--carry-forward-days", help="max age of a carried observation (default 7)")
    p.add_argument("--base-value", help="index level at inception (default 100)")
    p.add_argument("--periods-per-year", help="annualization factor (default 365)")
    p.add_argument("--risk-free", help="annual risk-free rate (default 0)")
    p.add_argument(
        "--reselect-monthly",
        action="store_const",
        const="true",
        default=None,
        help="reselect constituents at every month start, not only quarter starts",
    )
    p.add_argument("--out", help="output directory for backtest artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryptoindex",
        description="Build a square-root weighted cryptocurrency index from daily market data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a market data file")
    _add_run_flags(p)

    p = sub.add_parser("backtest", help="run the index backtest and write artifacts")
    _add_run_flags(p)

    p = sub.add_parser("weights", help="show the composition selected on a date")
    _add_run_flags(p)
    p.add_argument("--date", required=True, help="selection date, YYYY-MM-DD")

    p = sub.add_parser("stats", help="performance report for a date,level CSV")
    p.add_argument("series", help="CSV with header date,level")
    p.add_argument("--config")
    p.add_argument("--periods-per-year")
    p.add_argument("--risk-free")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {
        field: getattr(args, dest)
        for dest, field in _FLAG_FIELDS.items()
        if hasattr(args, dest)
    }
    return resolve_config(file_values, overrides)


def _load(config: RunConfig) -> MarketHistory:
    if config.data_path is None:
        raise UsageError("no market data given (--data or data_path in config)")
    if not config.data_path.is_file():
        raise UsageError(f"cannot read data file {config.data_path}")
    return load_history(config.data_path, carry_forward_days=config.carry_forward_days)


def cmd_validate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if config.data_path is None:
        raise UsageError("no market data given (--data or data_path in config)")
    path = config.data_path
    try:
        snapshots, issues = read_snapshots(path)
    except OSError as exc:
        raise UsageError(f"cannot read data file {path}: {exc.strerror}") from None
    for issue in issues:
        print(f"ERROR {issue}")
    n_rows = len(snapshots) + len(issues)
    if issues:
        print(f"FAILED: {len(issues)} invalid of {n_rows} rows")
        return EXIT_DATA
    if not snapshots:
        print("FAILED: empty history")
        return EXIT_DATA
    coins = {s.coin for s in snapshots}
    days = {s.date for s in snapshots}
    print(f"OK: {len(snapshots)} rows, {len(coins)} coins, {len(days)} days")
    return EXIT_OK


def cmd_backtest(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if config.output_dir is None:
        raise UsageError("no output directory given (--out or output_dir in config)")
    history = _load(config)
    first, last = history.date_range
    start = config.start or first
    end = config.end or last
    if not start < end:
        raise UsageError(f"start {start} must be before end {end}")
    result = run_backtest(history, config.backtest_config(start, end))
    report = perf_report(result.series, config.periods_per_year, config.risk_free_rate)

    artifacts = {
        SERIES_FILE: format_series(result.series),
        COMPOSITIONS_FILE: format_composition_log(result.compositions),
        DIAGNOSTICS_FILE: result.diagnostics.format(),
        REPORT_FILE: format_report(report),
        REPORT_CSV_FILE: format_report_csv(report),
    }
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    for name, text in artifacts.items():
        atomic_write_text(out / name, text)
    print(format_report(report), end="")
    print(f"wrote {len(result.series)} levels and {len(result.compositions)} compositions to {out}")
    return EXIT_OK


def cmd_weights(args: argparse.Namespace) -> int:
    config = _run_config(args)
    history = _load(config)
    try:
        day = date.fromisoformat(args.date)
    except ValueError:
        raise UsageError(f"bad --date {args.date!r}") from None
    params = config.smoothing
    coins = select_constituents(history, day, params, config.n_constituents)
    caps = adjusted_caps_on(history, day, params)
    weights = compute_weights({coin: caps[coin].value for coin in coins})
    print("coin,adjusted_cap,weight")
    for coin in coins:
        print(f"{coin},{caps[coin].value:.8f},{weights[coin]:.8f}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    file_values = read_config_file(args.config) if args.config else {}
    config = resolve_config(
        file_values,
        {"periods_per_year": args.periods_per_year, "risk_free_rate": args.risk_free},
    )
    path = Path(args.series)
    if not path.is_file():
        raise UsageError(f"cannot read series file {path}")
    series = read_series(path)
    report = perf_report(series, config.periods_per_year, config.risk_free_rate)
    print(format_report(report), end="")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "backtest": cmd_backtest,
    "weights": cmd_weights,
    "stats": cmd_stats,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # data problems: bad rows, out-of-range dates, unpriced constituents, empty selections
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
