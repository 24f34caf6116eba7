"""Backtest engine: accounting identity, cost math, no-lookahead."""

from datetime import date as Date

import numpy as np
import pytest

from sharpefolio.backtest import (BacktestConfig, STRATEGIES, run_backtest,
                                  simulate, strategy_weights)
from sharpefolio.data import PricePanel
from sharpefolio.errors import ConfigError, EmptyUniverse, InsufficientHistory
from sharpefolio.optimizer import WeightVector
from sharpefolio.selection import SelectionConfig, UniverseSnapshot, AssetLabel
from sharpefolio.synthetic import make_panel, make_random_panel, trading_calendar
from sharpefolio.cli import _with


def _flat_panel(n_days=10, price=100.0):
    cal = trading_calendar(Date(2024, 1, 1), n_days)
    closes = np.full((n_days, 1), price)
    volumes = np.full((n_days, 1), 1000.0)
    caps = np.full((n_days, 1), 1e6)
    return PricePanel(("A",), tuple(cal), closes, volumes, caps)


def test_accounting_identity_on_100_seeded_runs():
    for seed in range(100):
        panel = make_random_panel(6, 80, seed=seed)
        cfg = BacktestConfig(start=panel.calendar[25], end=panel.calendar[-1],
                             selection=SelectionConfig(top_n=6))
        report = run_backtest(panel, cfg)
        assert report.check_accounting(rtol=1e-9), f"seed {seed}"


def test_zero_cost_full_exposure_compounds_exactly():
    panel = make_panel(n_assets=1, n_days=30, seed=3, crash=False)

    def policy(idx, prev):
        return WeightVector({"AAA": 1.0}, panel.calendar[idx])

    report = simulate(panel, panel.calendar[1], panel.calendar[-1], policy,
                      initial_capital=1000.0, cost_bps_per_side=0.0)
    want = 1000.0 * panel.closes[-1, 0] / panel.closes[1, 0]
    assert report.equity_curve[-1] == pytest.approx(want, rel=1e-12)


def test_round_trip_cost_exact():
    panel = _flat_panel()
    hold = {"A": 1.0}

    def policy(idx, prev):
        # enter on the first trading close, exit on the last
        if idx == len(panel.calendar) - 1:
            return WeightVector({}, panel.calendar[idx])
        return WeightVector(hold, panel.calendar[idx])

    report = simulate(panel, panel.calendar[1], panel.calendar[-1], policy,
                      initial_capital=1.0, cost_bps_per_side=5.0)
    assert report.equity_curve[-1] == pytest.approx((1 - 0.0005) ** 2, abs=1e-12)


def test_cash_period_has_zero_return():
    panel = make_panel(n_assets=3, n_days=30, seed=1, crash=False)

    def policy(idx, prev):
        return WeightVector.empty(panel.calendar[idx])

    report = simulate(panel, panel.calendar[1], panel.calendar[-1], policy,
                      initial_capital=500.0, cost_bps_per_side=5.0)
    np.testing.assert_array_equal(report.period_returns, 0.0)
    assert report.equity_curve[-1] == 500.0  # nothing traded, nothing paid


def test_no_lookahead():
    # weights on day t must not change when data strictly after t changes
    panel = make_panel(n_assets=8, n_days=120, seed=9, crash=False)
    cfg = BacktestConfig(start=panel.calendar[30], end=panel.calendar[60],
                         use_risk_control=False)
    base = run_backtest(panel, cfg)

    closes = panel.closes.copy()
    closes[61:] *= np.exp(np.linspace(0, 2, closes.shape[0] - 61))[:, None]
    bumped = PricePanel(panel.assets, panel.calendar, closes,
                        panel.volumes.copy(), panel.caps.copy())
    alt = run_backtest(bumped, cfg)
    for a, b in zip(base.weights_history, alt.weights_history):
        assert a.weights == b.weights, a.date
    np.testing.assert_array_equal(base.equity_curve, alt.equity_curve)


def test_risk_control_caps_drawdown(fixture_panel):
    cfg = BacktestConfig(start=fixture_panel.calendar[30],
                         end=fixture_panel.calendar[-1])
    ctl = run_backtest(fixture_panel, cfg)
    raw = run_backtest(fixture_panel, _with(cfg, use_risk_control=False))
    assert ctl.metrics.mdd <= raw.metrics.mdd
    assert set(np.unique(ctl.exposures)) <= {0.0, 0.6, 0.8, 1.0}
    np.testing.assert_array_equal(raw.exposures, 1.0)


def test_all_strategies_run(fixture_panel):
    cfg = BacktestConfig(start=fixture_panel.calendar[30],
                         end=fixture_panel.calendar[120])
    for s in STRATEGIES:
        report = run_backtest(fixture_panel, _with(cfg, strategy=s))
        assert report.check_accounting()
        for wv in report.weights_history:
            total = sum(wv.weights.values())
            assert total == pytest.approx(1.0, abs=1e-9) or total == 0.0


def test_turnover_cap_respected(fixture_panel):
    from sharpefolio.optimizer import OptimizerConfig
    cfg = BacktestConfig(start=fixture_panel.calendar[30],
                         end=fixture_panel.calendar[100],
                         optimizer=OptimizerConfig(turnover_cap=0.1))
    report = run_backtest(fixture_panel, cfg)
    hist = report.weights_history
    for a, b in zip(hist, hist[1:]):
        assert b.turnover(a) <= 0.1 + 1e-9


def test_strategy_weights_unit():
    date = Date(2024, 1, 10)
    members = tuple(AssetLabel(s, "up", 0.01, 0.01, 1.0) for s in ("A", "B"))
    universe = UniverseSnapshot(date, members)
    from sharpefolio.optimizer import AssetStats
    stats = AssetStats(("A", "B"), np.array([0.01, 0.02]),
                       np.array([0.1, 0.1]), np.array([0.1, 0.2]),
                       np.diag([0.01, 0.01]))
    cfg = BacktestConfig(start=Date(2024, 1, 2), end=Date(2024, 2, 1))
    ew = strategy_weights("equal_weight", universe, stats, None, cfg)
    assert ew.weights == {"A": 0.5, "B": 0.5}
    cw = strategy_weights("cap_weighted", universe, stats,
                          {"A": 300.0, "B": 100.0}, cfg)
    assert cw.weights["A"] == pytest.approx(0.75)
    # missing caps degrade to equal weight
    cw0 = strategy_weights("cap_weighted", universe, stats, {}, cfg)
    assert cw0.weights == {"A": 0.5, "B": 0.5}
    with pytest.raises(EmptyUniverse):
        strategy_weights("equal_weight", UniverseSnapshot(date, ()), stats, None, cfg)


def test_adv_cap_limits_position():
    panel = make_panel(n_assets=6, n_days=80, seed=4, crash=False)
    cfg = BacktestConfig(start=panel.calendar[30], end=panel.calendar[50],
                         adv_cap_frac=1e-9, use_risk_control=False)
    report = run_backtest(panel, cfg)
    # with a near-zero ADV cap essentially everything stays in cash
    for wv in report.weights_history:
        assert sum(wv.weights.values()) < 0.01


def test_config_validation():
    with pytest.raises(ConfigError):
        BacktestConfig(start=Date(2024, 2, 1), end=Date(2024, 1, 1))
    with pytest.raises(ConfigError):
        BacktestConfig(start=Date(2024, 1, 1), end=Date(2024, 2, 1),
                       initial_capital=0.0)
    with pytest.raises(ConfigError):
        BacktestConfig(start=Date(2024, 1, 1), end=Date(2024, 2, 1),
                       strategy="nope")
    with pytest.raises(ConfigError):
        BacktestConfig(start=Date(2024, 1, 1), end=Date(2024, 2, 1),
                       rebalance="weekly")


def test_simulate_needs_prior_bar():
    panel = _flat_panel()
    with pytest.raises(InsufficientHistory):
        simulate(panel, panel.calendar[0], panel.calendar[-1],
                 lambda i, p: WeightVector.empty())
    with pytest.raises(InsufficientHistory):
        simulate(panel, Date(1990, 1, 1), Date(1990, 1, 2),
                 lambda i, p: WeightVector.empty())


def test_account_returns_property():
    panel = make_panel(n_assets=4, n_days=60, seed=8, crash=False)
    cfg = BacktestConfig(start=panel.calendar[25], end=panel.calendar[-1])
    report = run_backtest(panel, cfg)
    eq = report.equity_curve
    np.testing.assert_allclose(report.account_returns, eq[1:] / eq[:-1] - 1.0)
    assert len(report.account_returns) == len(report.exposures)
