"""INI-style configuration: one file drives every subcommand.

Sections and keys are validated strictly; an unknown key is rejected with
its name so typos never silently fall back to defaults.  See
configs/default.ini for a complete example.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path

from .backtest import STRATEGIES, BacktestConfig
from .alpha import GpConfig
from .errors import ConfigError
from .optimizer import OptimizerConfig
from .risk import CONSERVATIVE_TIERS, DEFAULT_TIERS, RiskConfig
from .selection import SelectionConfig

_KNOWN = {
    "data": {"path", "format", "max_missing_frac", "min_adv"},
    "selection": {"top_n", "lookback", "tau1", "tau2", "risk_free"},
    "optimizer": {"risk_aversion", "r_min", "bound_lower", "bound_upper",
                  "turnover_cap", "blend_alpha"},
    "risk": {"tiers", "cooldown_days", "preset"},
    "backtest": {"start", "end", "initial_capital", "rebalance",
                 "cost_bps_per_side", "strategy", "use_risk_control",
                 "stats_window", "adv_cap_frac"},
    "gp": {"population", "generations", "max_depth", "mutation_rate",
           "crossover_rate", "seed", "w_sharpe", "w_turnover", "w_mdd",
           "cost_bps_per_side"},
    "run": {"output_dir", "seed"},
}


@dataclass(frozen=True)
class DataConfig:
    path: str
    format: str = "csv"
    max_missing_frac: float = 0.1
    min_adv: float = 0.0


@dataclass(frozen=True)
class GlobalConfig:
    data: DataConfig
    backtest: BacktestConfig
    gp: GpConfig
    output_dir: str = "reports"
    seed: int = 0

    @property
    def selection(self) -> SelectionConfig:
        return self.backtest.selection

    @property
    def optimizer(self) -> OptimizerConfig:
        return self.backtest.optimizer

    @property
    def risk(self) -> RiskConfig:
        return self.backtest.risk


def load_config(path) -> GlobalConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")

    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    try:
        return _build(parser)
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc))


def _get(parser, section, key, cast, default):
    if section in parser and key in parser[section]:
        raw = parser[section][key]
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}")
    return default


def _build(parser: configparser.ConfigParser) -> GlobalConfig:
    if "data" not in parser or "path" not in parser["data"]:
        raise ConfigError("config must provide [data] path")
    data = DataConfig(
        path=parser["data"]["path"],
        format=_get(parser, "data", "format", str, "csv"),
        max_missing_frac=_get(parser, "data", "max_missing_frac", float, 0.1),
        min_adv=_get(parser, "data", "min_adv", float, 0.0),
    )
    if not (0 <= data.max_missing_frac < 1):
        raise ConfigError(f"[data] max_missing_frac must be in [0, 1), got {data.max_missing_frac}")
    if data.min_adv < 0:
        raise ConfigError(f"[data] min_adv must be >= 0, got {data.min_adv}")

    try:
        selection = SelectionConfig(
            top_n=_get(parser, "selection", "top_n", int, 10),
            lookback=_get(parser, "selection", "lookback", int, 20),
            tau1=_get(parser, "selection", "tau1", float, 0.002),
            tau2=_get(parser, "selection", "tau2", float, 0.02),
            risk_free=_get(parser, "selection", "risk_free", float, 0.0),
        )
        r_min = _get(parser, "optimizer", "r_min", float, None)
        optimizer = OptimizerConfig(
            risk_aversion=_get(parser, "optimizer", "risk_aversion", float, 5.0),
            r_min=r_min,
            bound_lower=_get(parser, "optimizer", "bound_lower", float, 0.0),
            bound_upper=_get(parser, "optimizer", "bound_upper", float, 1.0),
            turnover_cap=_get(parser, "optimizer", "turnover_cap", float, 2.0),
            blend_alpha=_get(parser, "optimizer", "blend_alpha", float, 0.5),
        )
        risk = RiskConfig(
            tiers=_parse_tiers(parser),
            cooldown_days=_get(parser, "risk", "cooldown_days", int, 1),
        )
        if "backtest" not in parser or "start" not in parser["backtest"] \
                or "end" not in parser["backtest"]:
            raise ConfigError("config must provide [backtest] start and end")
        backtest = BacktestConfig(
            start=Date.fromisoformat(parser["backtest"]["start"]),
            end=Date.fromisoformat(parser["backtest"]["end"]),
            initial_capital=_get(parser, "backtest", "initial_capital", float, 1_000_000.0),
            rebalance=_get(parser, "backtest", "rebalance", str, "daily"),
            cost_bps_per_side=_get(parser, "backtest", "cost_bps_per_side", float, 5.0),
            strategy=_get(parser, "backtest", "strategy", str, "sharpe_blend"),
            use_risk_control=_get(parser, "backtest", "use_risk_control", bool, True),
            stats_window=_get(parser, "backtest", "stats_window", int, None),
            adv_cap_frac=_get(parser, "backtest", "adv_cap_frac", float, None),
            selection=selection,
            optimizer=optimizer,
            risk=risk,
        )
        gp = GpConfig(
            population=_get(parser, "gp", "population", int, 50),
            generations=_get(parser, "gp", "generations", int, 10),
            max_depth=_get(parser, "gp", "max_depth", int, 6),
            mutation_rate=_get(parser, "gp", "mutation_rate", float, 0.3),
            crossover_rate=_get(parser, "gp", "crossover_rate", float, 0.7),
            seed=_get(parser, "gp", "seed", int, 0),
            fitness_weights=(
                _get(parser, "gp", "w_sharpe", float, 1.0),
                _get(parser, "gp", "w_turnover", float, 0.1),
                _get(parser, "gp", "w_mdd", float, 1.0),
            ),
            cost_bps_per_side=_get(parser, "gp", "cost_bps_per_side", float, 5.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc))

    return GlobalConfig(
        data=data,
        backtest=backtest,
        gp=gp,
        output_dir=_get(parser, "run", "output_dir", str, "reports"),
        seed=_get(parser, "run", "seed", int, 0),
    )


def _parse_tiers(parser) -> tuple[tuple[float, float], ...]:
    preset = _get(parser, "risk", "preset", str, None)
    raw = _get(parser, "risk", "tiers", str, None)
    if preset and raw:
        raise ConfigError("[risk] give either preset or tiers, not both")
    if preset:
        presets = {"default": DEFAULT_TIERS, "conservative": CONSERVATIVE_TIERS}
        if preset not in presets:
            raise ConfigError(f"[risk] unknown preset {preset!r}")
        return presets[preset]
    if raw is None:
        return DEFAULT_TIERS
    tiers = []
    for part in raw.split(","):
        try:
            thr, exp = part.split(":")
            tiers.append((float(thr), float(exp)))
        except ValueError:
            raise ConfigError(f"[risk] tiers: cannot parse {part!r} "
                              "(expected threshold:exposure, comma-separated)")
    return tuple(tiers)
