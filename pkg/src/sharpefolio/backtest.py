"""Daily backtest loop: screen, weight, risk-scale, trade, account.

Accounting convention (everything downstream relies on it):

    equity[0]   = initial_capital - costs_paid[0]          (entry trade)
    equity[t+1] = equity[t] * (1 + exposures[t] * period_returns[t])
                  - costs_paid[t+1]

where ``exposures[t]`` and the weights set at close t earn
``period_returns[t]`` over (t, t+1], and ``costs_paid[t+1]`` is the cost of
the rebalance executed at close t+1.  Costs are charged per side on the
traded notional; signals only ever use data through the bar before the
trade (no lookahead).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np

from .data import PricePanel, to_returns
from .errors import (ConfigError, EmptyUniverse, InsufficientHistory,
                     SharpefolioError)
from .metrics import MetricsBlock, compute_block
from .optimizer import (AssetStats, OptimizerConfig, WeightVector,
                        apply_turnover_cap, blend_weights, estimate_stats,
                        solve_mean_variance)
from .risk import RiskConfig, RiskState, update as risk_update
from .selection import SelectionConfig, UniverseSnapshot, select_universe

log = logging.getLogger(__name__)

STRATEGIES = ("sharpe_blend", "equal_weight", "cap_weighted", "mean_variance")


@dataclass(frozen=True)
class BacktestConfig:
    start: Date
    end: Date
    initial_capital: float = 1_000_000.0
    rebalance: str = "daily"
    cost_bps_per_side: float = 5.0
    strategy: str = "sharpe_blend"
    use_risk_control: bool = True
    stats_window: int | None = None       # default: selection lookback
    adv_cap_frac: float | None = None     # optional ADV-based position cap
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)

    def __post_init__(self):
        if self.start >= self.end:
            raise ConfigError(f"start {self.start} must precede end {self.end}")
        if self.initial_capital <= 0:
            raise ConfigError(f"initial_capital must be > 0, got {self.initial_capital}")
        if self.cost_bps_per_side < 0:
            raise ConfigError(f"cost_bps_per_side must be >= 0, got {self.cost_bps_per_side}")
        if self.rebalance != "daily":
            raise ConfigError(f"unsupported rebalance mode {self.rebalance!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")

    @property
    def window(self) -> int:
        return self.stats_window or self.selection.lookback


@dataclass
class BacktestReport:
    dates: list[Date]
    equity_curve: np.ndarray        # len T+1, post-cost closes
    period_returns: np.ndarray      # len T, invested-sleeve return over (t, t+1]
    exposures: np.ndarray           # len T, exposure applied over (t, t+1]
    costs_paid: np.ndarray          # len T+1, cost charged at each close
    weights_history: list[WeightVector]
    initial_capital: float
    metrics: MetricsBlock | None = None

    @property
    def account_returns(self) -> np.ndarray:
        """Equity-level per-period returns (exposure, costs included)."""
        eq = self.equity_curve
        return eq[1:] / eq[:-1] - 1.0

    def check_accounting(self, rtol: float = 1e-9) -> bool:
        """Verify the bar-by-bar accounting identity in the module docstring."""
        eq = self.equity_curve
        if not np.isclose(eq[0], self.initial_capital - self.costs_paid[0],
                          rtol=rtol, atol=0.0):
            return False
        lhs = eq[1:]
        rhs = eq[:-1] * (1.0 + self.exposures * self.period_returns) - self.costs_paid[1:]
        return bool(np.allclose(lhs, rhs, rtol=rtol, atol=0.0))


def strategy_weights(strategy: str, universe: UniverseSnapshot, stats: AssetStats,
                     caps: dict[str, float] | None, cfg: BacktestConfig) -> WeightVector:
    """Target weights over the current universe for one rebalance."""
    syms = universe.symbols
    if not syms:
        raise EmptyUniverse("strategy_weights needs a non-empty universe")
    if strategy == "sharpe_blend":
        return blend_weights(stats, universe.date, cfg.optimizer.blend_alpha)
    if strategy == "equal_weight":
        w = 1.0 / len(syms)
        return WeightVector({s: w for s in syms}, universe.date)
    if strategy == "cap_weighted":
        caps = caps or {}
        raw = np.array([max(caps.get(s, 0.0), 0.0) for s in syms])
        if raw.sum() <= 0:
            w = 1.0 / len(syms)
            return WeightVector({s: w for s in syms}, universe.date)
        raw = raw / raw.sum()
        return WeightVector(dict(zip(syms, raw.tolist())), universe.date)
    if strategy == "mean_variance":
        return solve_mean_variance(stats, cfg.optimizer, "utility", universe.date)
    raise ConfigError(f"unknown strategy {strategy!r}")


def run_backtest(panel: PricePanel, cfg: BacktestConfig,
                 benchmark_returns=None) -> BacktestReport:
    """Run the configured strategy over [start, end] on a cleaned panel."""
    policy = _StrategyPolicy(panel, cfg)
    report = simulate(panel, cfg.start, cfg.end, policy,
                      initial_capital=cfg.initial_capital,
                      cost_bps_per_side=cfg.cost_bps_per_side,
                      risk_cfg=cfg.risk if cfg.use_risk_control else None)
    report.metrics = compute_block(report.equity_curve, report.account_returns,
                                   report.weights_history,
                                   benchmark=benchmark_returns,
                                   risk_free=cfg.selection.risk_free)
    return report


class _StrategyPolicy:
    """Turns the screen + strategy + turnover cap into a per-date weight policy."""

    def __init__(self, panel: PricePanel, cfg: BacktestConfig):
        self.panel = panel
        self.cfg = cfg
        self.returns = to_returns(panel)

    def __call__(self, idx: int, prev: WeightVector) -> WeightVector:
        panel, cfg = self.panel, self.cfg
        signal_idx = idx - 1  # trade at close idx on data through idx-1
        signal_date = panel.calendar[signal_idx]
        try:
            universe = select_universe(panel, signal_date, cfg.selection)
        except EmptyUniverse:
            return WeightVector.empty(panel.calendar[idx])
        # return rows [signal_idx - window, signal_idx) cover closes through signal_idx
        if signal_idx < cfg.window:
            raise InsufficientHistory(
                f"{signal_date}: need {cfg.window} return observations")
        sub = self.returns.values[signal_idx - cfg.window:signal_idx]
        stats = _stats_from_rows(sub, universe.symbols, panel,
                                 cfg.selection.risk_free)
        caps = {s: float(panel.caps[signal_idx, panel.asset_index(s)])
                for s in universe.symbols}
        target = strategy_weights(cfg.strategy, universe, stats, caps, cfg)
        if cfg.adv_cap_frac is not None:
            target = _apply_adv_cap(target, panel, signal_idx, cfg)
        capped = apply_turnover_cap(prev, target, cfg.optimizer.turnover_cap)
        return WeightVector(capped.weights, panel.calendar[idx])


def _stats_from_rows(rows: np.ndarray, symbols, panel: PricePanel,
                     risk_free: float) -> AssetStats:
    cols = [panel.asset_index(s) for s in symbols]
    block = rows[:, cols]
    mu = block.mean(axis=0)
    if len(cols) == 1:
        cov = block.var(ddof=1, axis=0).reshape(1, 1)
    else:
        cov = np.cov(block, rowvar=False, ddof=1)
    sigma = np.sqrt(np.diag(cov))
    sh = np.full(len(cols), np.nan)
    ok = sigma > 0
    sh[ok] = (mu[ok] - risk_free) / sigma[ok]
    degenerate = tuple(np.asarray(symbols)[~ok])
    return AssetStats(tuple(symbols), mu, sigma, sh, cov, risk_free, degenerate)


def _apply_adv_cap(target: WeightVector, panel: PricePanel, signal_idx: int,
                   cfg: BacktestConfig) -> WeightVector:
    """Cap each weight at adv_cap_frac * ADV-notional / portfolio notional.

    Excess weight is redistributed to uncapped names; if everything caps
    out, the remainder stays in cash (flagged via log).
    """
    lookback = cfg.selection.lookback
    lo = max(0, signal_idx - lookback + 1)
    caps = {}
    for s in target.weights:
        j = panel.asset_index(s)
        adv = float(panel.volumes[lo:signal_idx + 1, j].mean())
        price = float(panel.closes[signal_idx, j])
        caps[s] = cfg.adv_cap_frac * adv * price / cfg.initial_capital
    w = dict(target.weights)
    for _ in range(len(w) + 1):
        over = {s: w[s] - caps[s] for s in w if w[s] > caps[s] + 1e-15}
        if not over:
            return WeightVector(w, target.date)
        excess = sum(over.values())
        for s in over:
            w[s] = caps[s]
        free = [s for s in w if w[s] < caps[s] - 1e-15]
        if not free:
            log.warning("ADV cap binds on every asset; %.4f left in cash", excess)
            return WeightVector(w, target.date)
        headroom = {s: caps[s] - w[s] for s in free}
        total_head = sum(headroom.values())
        for s in free:
            w[s] += excess * headroom[s] / total_head if total_head > 0 else 0.0
    return WeightVector(w, target.date)


def simulate(panel: PricePanel, start: Date, end: Date, policy,
             initial_capital: float = 1_000_000.0,
             cost_bps_per_side: float = 5.0,
             risk_cfg: RiskConfig | None = None) -> BacktestReport:
    """Core deterministic day loop.

    ``policy(idx, prev_weights) -> WeightVector`` supplies target weights at
    each trading close (global calendar index ``idx``); the engine handles
    exposure scaling, trading costs, and the accounting identity.
    """
    cal = panel.calendar
    trading = [i for i, d in enumerate(cal) if start <= d <= end]
    if not trading:
        raise InsufficientHistory(f"panel has no dates in [{start}, {end}]")
    if trading[0] == 0:
        raise InsufficientHistory("first trading day needs at least one prior bar")

    rate = cost_bps_per_side / 1e4
    state = RiskState()
    dates: list[Date] = []
    equity: list[float] = []
    exposures: list[float] = []
    period_returns: list[float] = []
    costs: list[float] = []
    weights_history: list[WeightVector] = []

    prev_w = WeightVector.empty()
    prev_exposure = 0.0
    prev_equity = initial_capital
    prev_idx: int | None = None

    for idx in trading:
        # mark existing positions to today's closes
        if prev_idx is None:
            r_pf = 0.0
            gross = initial_capital
        else:
            r_pf = _sleeve_return(panel, prev_idx, idx, prev_w)
            gross = prev_equity * (1.0 + prev_exposure * r_pf)
            period_returns.append(r_pf)
            exposures.append(prev_exposure)

        # exposure for the coming period, from yesterday's closing equity
        if risk_cfg is not None:
            state = risk_update(state, prev_equity, risk_cfg)
            exposure = state.exposure
        else:
            exposure = 1.0

        target = policy(idx, prev_w)
        if not isinstance(target, WeightVector):
            raise SharpefolioError("policy must return a WeightVector")

        # traded notional: change in exposure-scaled fractions, drift-adjusted
        denom = 1.0 + prev_exposure * r_pf
        syms = set(prev_w.weights) | set(target.weights)
        traded_frac = 0.0
        for s in syms:
            drift = 1.0 + _asset_return(panel, prev_idx, idx, s) if prev_idx is not None else 1.0
            cur = prev_exposure * prev_w.weights.get(s, 0.0) * drift / denom
            traded_frac += abs(exposure * target.weights.get(s, 0.0) - cur)
        cost = rate * gross * traded_frac

        eq = gross - cost
        dates.append(cal[idx])
        equity.append(eq)
        costs.append(cost)
        weights_history.append(WeightVector(target.weights, cal[idx]))

        prev_w = target
        prev_exposure = exposure
        prev_equity = eq
        prev_idx = idx

    return BacktestReport(dates, np.array(equity), np.array(period_returns),
                          np.array(exposures), np.array(costs),
                          weights_history, initial_capital)


def _asset_return(panel: PricePanel, i0: int, i1: int, symbol: str) -> float:
    j = panel.asset_index(symbol)
    return float(panel.closes[i1, j] / panel.closes[i0, j] - 1.0)


def _sleeve_return(panel: PricePanel, i0: int, i1: int, w: WeightVector) -> float:
    if not w.weights:
        return 0.0
    return float(sum(x * _asset_return(panel, i0, i1, s)
                     for s, x in w.weights.items()))
