"""Command-line interface.

Subcommands: backtest, select, frontier, evolve, metrics.  One config file
drives everything; flags only override the output directory and seed (the
SHARPEFOLIO_OUTPUT_DIR environment variable also overrides the former).

Exit codes: 0 success, 1 config error, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import date as Date
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .alpha import GpConfig, evolve, serialize
from .backtest import BacktestConfig, run_backtest
from .config import GlobalConfig, load_config
from .data import clean_panel, load_panel
from .errors import (ConfigError, DataError, EmptyUniverse, SharpefolioError)
from .optimizer import efficient_frontier, estimate_stats
from .selection import select_universe

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

BENCHMARKS = ("equal_weight", "cap_weighted", "mean_variance")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SharpefolioError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharpefolio",
        description="Sharpe-screened portfolio research engine")
    sub = parser.add_subparsers(required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the INI config")
        p.add_argument("--output-dir", default=None)
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("backtest", help="run the strategy plus all benchmarks")
    common(p)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("select", help="print the universe at a date")
    common(p)
    p.add_argument("--date", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("frontier", help="efficient frontier for the latest universe")
    common(p)
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("evolve", help="genetic alpha search")
    common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("metrics", help="metrics block for an equity.csv")
    p.add_argument("equity_csv")
    p.set_defaults(func=cmd_metrics)
    return parser


def _load(args) -> tuple[GlobalConfig, Path]:
    cfg = load_config(args.config)
    out = os.environ.get("SHARPEFOLIO_OUTPUT_DIR") or cfg.output_dir
    if args.output_dir:
        out = args.output_dir
    if getattr(args, "seed", None) is not None:
        object.__setattr__(cfg, "seed", args.seed)
        object.__setattr__(cfg.gp, "seed", args.seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, out_dir


def _panel(cfg: GlobalConfig):
    panel = load_panel(cfg.data.path, cfg.data.format)
    return clean_panel(panel, cfg.data.max_missing_frac, cfg.data.min_adv)


def cmd_backtest(args) -> int:
    cfg, out_dir = _load(args)
    panel = _panel(cfg)

    # equal-weight run doubles as the benchmark for alpha/beta regression
    runs: dict[str, object] = {}
    bench_cfg = _with(cfg.backtest, strategy="equal_weight", use_risk_control=False)
    bench_report = run_backtest(panel, bench_cfg)
    bench_returns = bench_report.account_returns

    main_report = run_backtest(panel, cfg.backtest, benchmark_returns=bench_returns)
    runs[cfg.backtest.strategy] = main_report
    for name in BENCHMARKS:
        bt_cfg = _with(cfg.backtest, strategy=name, use_risk_control=False)
        if name == "equal_weight":
            report = bench_report
            report.metrics = metrics_mod.compute_block(
                report.equity_curve, report.account_returns,
                report.weights_history, benchmark=bench_returns,
                risk_free=cfg.selection.risk_free)
        else:
            report = run_backtest(panel, bt_cfg, benchmark_returns=bench_returns)
        runs.setdefault(f"benchmark_{name}", report)

    for name, report in runs.items():
        _write_report(out_dir / name, report)
    _write_comparison(out_dir / "comparison.csv", runs)
    print(f"wrote {len(runs)} report directories under {out_dir}")
    return EXIT_OK


def _with(cfg: BacktestConfig, **kw) -> BacktestConfig:
    fields = {k: getattr(cfg, k) for k in (
        "start", "end", "initial_capital", "rebalance", "cost_bps_per_side",
        "strategy", "use_risk_control", "stats_window", "adv_cap_frac",
        "selection", "optimizer", "risk")}
    fields.update(kw)
    return BacktestConfig(**fields)


def _write_report(dir_path: Path, report) -> None:
    dir_path.mkdir(parents=True, exist_ok=True)
    with (dir_path / "equity.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "equity", "exposure", "cost"])
        exposures = np.append(report.exposures, np.nan)  # last close opens no period
        for d, eq, ex, c in zip(report.dates, report.equity_curve,
                                exposures, report.costs_paid):
            w.writerow([d.isoformat(), repr(float(eq)),
                        "" if np.isnan(ex) else repr(float(ex)),
                        repr(float(c))])
    with (dir_path / "weights.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "symbol", "weight"])
        for wv in report.weights_history:
            for sym in sorted(wv.weights):
                w.writerow([wv.date.isoformat(), sym, repr(wv.weights[sym])])
    (dir_path / "metrics.json").write_text(report.metrics.to_json() + "\n")


def _write_comparison(path: Path, runs: dict) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", *metrics_mod.FIELDS])
        for name, report in runs.items():
            block = report.metrics.to_dict()
            w.writerow([name] + [repr(block[f]) for f in metrics_mod.FIELDS])


def cmd_select(args) -> int:
    cfg, _out = _load(args)
    panel = _panel(cfg)
    try:
        date = Date.fromisoformat(args.date)
    except ValueError as exc:
        raise ConfigError(f"--date: {exc}")
    writer = csv.writer(sys.stdout)
    writer.writerow(["rank", "symbol", "label", "slope", "vol", "rolling_sharpe"])
    try:
        snapshot = select_universe(panel, date, cfg.selection)
    except EmptyUniverse:
        return EXIT_OK
    for rank, m in enumerate(snapshot.members, start=1):
        writer.writerow([rank, m.symbol, m.label, repr(m.slope), repr(m.vol),
                         repr(m.rolling_sharpe)])
    return EXIT_OK


def cmd_frontier(args) -> int:
    cfg, out_dir = _load(args)
    panel = _panel(cfg)
    from .data import to_returns
    date = panel.calendar[-1]
    snapshot = select_universe(panel, date, cfg.selection)
    returns = to_returns(panel)
    stats = estimate_stats(returns, cfg.backtest.window,
                           cfg.selection.risk_free, snapshot.symbols)
    lambdas = np.logspace(-2, 2, args.points)
    points = efficient_frontier(stats, lambdas, cfg.optimizer, date)
    path = out_dir / "frontier.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "expected_return", "variance", *snapshot.symbols])
        for p in points:
            if p.error:
                w.writerow([repr(p.risk_aversion), "", "", p.error])
                continue
            weights = p.weights.as_array(snapshot.symbols)
            w.writerow([repr(p.risk_aversion), repr(p.expected_return),
                        repr(p.variance)] + [repr(float(x)) for x in weights])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg, out_dir = _load(args)
    panel = _panel(cfg)
    ranked = evolve(panel, cfg.gp)
    path = out_dir / "alphas.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "fitness", "sharpe", "turnover", "mdd", "expression"])
        for rank, (expr, score) in enumerate(ranked, start=1):
            w.writerow([rank, repr(score.fitness), repr(score.sharpe),
                        repr(score.turnover), repr(score.mdd), serialize(expr)])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    path = Path(args.equity_csv)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    equity = []
    with path.open() as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "equity" not in reader.fieldnames:
            raise DataError(f"{path} needs a header with an 'equity' column")
        for row in reader:
            try:
                equity.append(float(row["equity"]))
            except ValueError as exc:
                raise DataError(f"{path}: {exc}")
    if len(equity) < 2:
        raise DataError(f"{path} has fewer than 2 equity points")
    eq = np.asarray(equity)
    rets = eq[1:] / eq[:-1] - 1.0
    block = metrics_mod.compute_block(eq, rets)
    print(block.to_json())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
