"""Seeded synthetic price panels for tests, fixtures, and benchmarks.

The default fixture plants recognizable regimes so screening and risk
control have something to find: one dominant high-Sharpe/low-vol asset
(largest cap and volume), a handful of trending, volatile, and sideways
names, and a market-wide crash window deep enough to trip the drawdown
tiers.
"""

from __future__ import annotations

from datetime import date as Date, timedelta

import numpy as np

from .data import PricePanel

DOMINANT = "AAA"  # planted winner; also first lexicographically


def trading_calendar(start: Date, n_days: int) -> tuple[Date, ...]:
    """Weekday calendar of n_days starting at the first weekday >= start."""
    out = []
    d = start
    while len(out) < n_days:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return tuple(out)


def make_panel(n_assets: int = 20, n_days: int = 700, seed: int = 7,
               start: Date = Date(2023, 1, 2),
               crash: bool = True) -> PricePanel:
    """Build the regime-planted panel described in the module docstring."""
    rng = np.random.default_rng(seed)
    calendar = trading_calendar(start, n_days)
    closes = np.empty((n_days, n_assets))
    volumes = np.empty_like(closes)
    caps = np.empty_like(closes)
    names = [_symbol(i) for i in range(n_assets)]
    names[0] = DOMINANT

    # regime assignment: 0 = planted winner, then cycle up/volatile/down/sideways.
    # Up and volatile names carry the large caps so the liquidity screen sees a
    # stable mix; down and sideways names are small-cap background noise.
    for j in range(n_assets):
        if j == 0:
            drift, vol = 0.0040, 0.005
            base_cap = 5e10
        else:
            kind = (j - 1) % 4
            drift, vol = [(0.0025, 0.009),    # up, but weaker than the winner
                          (0.0004, 0.022),    # volatile
                          (-0.0030, 0.009),   # down-trending
                          (0.0000, 0.006)][kind]  # sideways
            big = kind in (0, 1)
            base_cap = rng.uniform(1e10, 3e10) if big else rng.uniform(1e8, 5e8)
        rets = rng.normal(drift, vol, n_days)
        if crash:
            # late market-wide slide, deep enough to cross the 6% drawdown
            # tier of a diversified book but recoverable for raw benchmarks
            window = slice(560, 585)
            rets[window] -= 0.006
        closes[:, j] = 100.0 * np.exp(np.cumsum(rets))
        # volume tracks cap so the liquidity screens broadly agree
        base_volume = base_cap / 1e4 * (1.0 if j == 0 else rng.uniform(0.6, 1.4))
        volumes[:, j] = rng.uniform(0.7, 1.3, n_days) * base_volume
        caps[:, j] = base_cap * closes[:, j] / closes[0, j]

    return PricePanel(tuple(names), calendar, closes, volumes, caps)


def make_random_panel(n_assets: int, n_days: int, seed: int,
                      start: Date = Date(2023, 1, 2)) -> PricePanel:
    """Plain lognormal panel with per-asset drift/vol drawn at random."""
    rng = np.random.default_rng(seed)
    calendar = trading_calendar(start, n_days)
    drift = rng.uniform(-0.0005, 0.001, n_assets)
    vol = rng.uniform(0.005, 0.03, n_assets)
    rets = rng.normal(drift, vol, (n_days, n_assets))
    closes = 100.0 * np.exp(np.cumsum(rets, axis=0))
    volumes = rng.uniform(1e5, 5e6, (n_days, n_assets))
    caps = rng.uniform(1e8, 1e11, n_assets) * (closes / closes[0])
    names = tuple(_symbol(i) for i in range(n_assets))
    return PricePanel(names, calendar, closes, volumes, caps)


def _symbol(i: int) -> str:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    a, b = divmod(i, 26)
    return f"S{letters[a % 26]}{letters[b]}"
