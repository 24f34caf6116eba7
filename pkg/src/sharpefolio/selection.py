"""Three-layer universe screen: liquidity/size ranks -> trend label -> Sharpe rank.

An asset makes the tradable universe at a rebalance date when it is in the
top-N of BOTH the market-cap and volume rankings, its trend label is "up"
or "volatile", and it survives the final rolling-Sharpe ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from . import kernels
from .data import PricePanel
from .errors import EmptyUniverse, InsufficientHistory, NoDataAtDate

UP = "up"
DOWN = "down"
VOLATILE = "volatile"
SIDEWAYS = "sideways"
KEEP_LABELS = (UP, VOLATILE)


@dataclass(frozen=True)
class SelectionConfig:
    top_n: int = 10
    lookback: int = 20
    tau1: float = 0.002      # trend-slope threshold, normalized-price units/day
    tau2: float = 0.02       # volatility threshold, daily log-return std
    risk_free: float = 0.0   # per-period

    def __post_init__(self):
        if self.top_n < 1:
            raise ValueError(f"top_n must be >= 1, got {self.top_n}")
        if self.lookback < 2:
            raise ValueError(f"lookback must be >= 2, got {self.lookback}")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("tau1 and tau2 must be > 0")


@dataclass(frozen=True)
class AssetLabel:
    symbol: str
    label: str
    slope: float
    vol: float
    rolling_sharpe: float


@dataclass(frozen=True)
class UniverseSnapshot:
    date: Date
    members: tuple[AssetLabel, ...]  # rank order, best first

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(m.symbol for m in self.members)


def rank_by_cap_and_volume(panel: PricePanel, date: Date, top_n: int,
                           lookback: int = 20) -> list[str]:
    """Intersection of the top-n market-cap and top-n volume rankings.

    Where the single-day volume is zero the lookback-average volume is used
    instead.  Result ordered by market cap descending, ties broken by symbol.
    """
    idx = panel.date_index(date)
    caps = panel.caps[idx].copy()
    vols = panel.volumes[idx].copy()
    lo = max(0, idx - lookback + 1)
    avg_vol = np.nan_to_num(panel.volumes[lo:idx + 1], nan=0.0).mean(axis=0)
    zero = ~(vols > 0)
    vols[zero] = avg_vol[zero]
    caps = np.nan_to_num(caps, nan=-np.inf)
    if not np.isfinite(caps).any() and not (vols > 0).any():
        raise NoDataAtDate(f"no cap/volume data at {date}")

    def top_set(values):
        order = sorted(range(panel.n_assets),
                       key=lambda j: (-values[j], panel.assets[j]))
        return set(order[:top_n])

    both = top_set(caps) & top_set(vols)
    ranked = sorted(both, key=lambda j: (-caps[j], panel.assets[j]))
    return [panel.assets[j] for j in ranked]


def calc_slope(prices: np.ndarray) -> float:
    """OLS slope of first-value-normalized price against the time index."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size < 2:
        raise InsufficientHistory("slope needs at least 2 prices")
    y = prices / prices[0]
    t = np.arange(y.size, dtype=np.float64)
    t_c = t - t.mean()
    return float((t_c @ (y - y.mean())) / (t_c @ t_c))


def label_asset(prices: np.ndarray, cfg: SelectionConfig) -> AssetLabel:
    """Apply the ordered trend/volatility decision chain over the lookback window."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.size < cfg.lookback:
        raise InsufficientHistory(
            f"need {cfg.lookback} prices, got {prices.size}")
    window = prices[-cfg.lookback:]
    slope = calc_slope(window)
    log_ret = np.diff(np.log(window))
    vol = float(log_ret.std(ddof=1)) if log_ret.size > 1 else 0.0
    if slope > cfg.tau1:
        label = UP
    elif slope < -cfg.tau1:
        label = DOWN
    elif vol > cfg.tau2:
        label = VOLATILE
    else:
        label = SIDEWAYS
    return AssetLabel("", label, slope, vol, np.nan)


def rolling_sharpe(returns: np.ndarray, window: int, risk_free: float = 0.0) -> np.ndarray:
    """Per-window (mean excess / sample std); NaN marks zero-variance windows."""
    returns = np.asarray(returns, dtype=np.float64)
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    if returns.size < window:
        raise InsufficientHistory(
            f"need {window} returns, got {returns.size}")
    mean, std = kernels.rolling_mean_std(returns - risk_free, window)
    out = np.full(mean.size, np.nan)
    ok = std > 0
    out[ok] = mean[ok] / std[ok]
    return out


def select_universe(panel: PricePanel, date: Date, cfg: SelectionConfig) -> UniverseSnapshot:
    """Compose the full screen at one rebalance date.

    Raises EmptyUniverse when nothing survives; callers hold cash that period.
    """
    idx = panel.date_index(date)
    if idx < cfg.lookback:
        raise InsufficientHistory(
            f"{date} has only {idx} prior bars, need {cfg.lookback}")
    u0 = rank_by_cap_and_volume(panel, date, cfg.top_n, cfg.lookback)

    labeled = []
    for sym in u0:
        j = panel.asset_index(sym)
        window = panel.closes[idx - cfg.lookback + 1:idx + 1, j]
        base = label_asset(window, cfg)
        if base.label not in KEEP_LABELS:
            continue
        closes = panel.closes[idx - cfg.lookback:idx + 1, j]
        rets = closes[1:] / closes[:-1] - 1.0
        sharpe = rolling_sharpe(rets, cfg.lookback, cfg.risk_free)[-1]
        labeled.append(AssetLabel(sym, base.label, base.slope, base.vol,
                                  float(sharpe)))
    if not labeled:
        raise EmptyUniverse(f"no asset labeled {KEEP_LABELS} at {date}")

    def sort_key(m: AssetLabel):
        s = m.rolling_sharpe
        return (-(s if np.isfinite(s) else -np.inf), m.symbol)

    members = tuple(sorted(labeled, key=sort_key))
    return UniverseSnapshot(date, members)
