"""Risk-adjusted performance metrics.

Conventions (the formulas in the literature leave these open, so they are
pinned here): annualization factor defaults to 252 trading days; Sharpe uses
the sample (n-1) standard deviation; skewness/kurtosis use population
moments; VaR/CVaR are empirical lower order statistics in returns space
(losses negative); win rate counts strictly positive periods.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import (DegenerateBenchmark, EmptySeries, InsufficientSample,
                     InsufficientSnapshots, NoDownside, NonPositiveStart,
                     NonPositiveValues, ZeroVariance)

PERIODS_PER_YEAR = 252


def roi(v_start: float, v_end: float) -> float:
    if v_start <= 0:
        raise NonPositiveStart(f"starting value must be > 0, got {v_start}")
    return float((v_end - v_start) / v_start)


def sharpe(returns, risk_free: float = 0.0,
           periods_per_year: int = PERIODS_PER_YEAR) -> float:
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 2:
        raise EmptySeries("sharpe needs at least 2 observations")
    excess = r - risk_free
    sd = excess.std(ddof=1)
    if sd == 0:
        raise ZeroVariance("constant returns have no Sharpe ratio")
    return float(excess.mean() / sd * math.sqrt(periods_per_year))


def max_drawdown(equity) -> float:
    curve = np.asarray(equity, dtype=np.float64)
    if curve.size == 0:
        raise EmptySeries("empty equity curve")
    if (curve <= 0).any():
        raise NonPositiveValues("equity curve must be positive")
    return kernels.max_drawdown(curve)


def turnover_series(weights_history) -> np.ndarray:
    """Sum of absolute weight changes between consecutive snapshots."""
    if len(weights_history) < 2:
        raise InsufficientSnapshots("need at least 2 weight snapshots")
    return np.array([b.turnover(a)
                     for a, b in zip(weights_history, weights_history[1:])])


def skewness(returns) -> float:
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 3:
        raise EmptySeries("skewness needs at least 3 observations")
    mu = r.mean()
    sd = r.std()  # population
    if sd == 0:
        raise ZeroVariance("constant returns have no skewness")
    return float(((r - mu) ** 3).mean() / sd ** 3)


def excess_kurtosis(returns) -> float:
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 3:
        raise EmptySeries("kurtosis needs at least 3 observations")
    mu = r.mean()
    sd = r.std()
    if sd == 0:
        raise ZeroVariance("constant returns have no kurtosis")
    return float(((r - mu) ** 4).mean() / sd ** 4 - 3.0)


def var_cvar(returns, alpha: float = 0.05) -> tuple[float, float]:
    """Empirical VaR at the ceil(alpha*n) lower order statistic, and the
    mean of returns at or below it.  Both signed (losses negative)."""
    if not (0 < alpha < 0.5):
        raise ValueError(f"alpha must be in (0, 0.5), got {alpha}")
    r = np.asarray(returns, dtype=np.float64)
    if r.size < math.ceil(1.0 / alpha):
        raise InsufficientSample(
            f"need >= {math.ceil(1.0 / alpha)} observations for alpha={alpha}")
    k = math.ceil(alpha * r.size)
    var = float(np.sort(r)[k - 1])
    cvar = float(r[r <= var].mean())
    return var, cvar


def sortino(returns, risk_free: float = 0.0,
            periods_per_year: int = PERIODS_PER_YEAR) -> float:
    r = np.asarray(returns, dtype=np.float64)
    if r.size == 0:
        raise EmptySeries("empty return series")
    excess = r - risk_free
    downside = np.minimum(excess, 0.0)
    if not (downside < 0).any():
        raise NoDownside("no return below the risk-free rate")
    sigma_d = math.sqrt(float((downside ** 2).mean()))
    return float(excess.mean() / sigma_d * math.sqrt(periods_per_year))


def alpha_beta(portfolio, benchmark, risk_free: float = 0.0,
               periods_per_year: int = PERIODS_PER_YEAR) -> tuple[float, float]:
    """OLS of portfolio excess returns on benchmark excess returns.

    Returns (alpha annualized by * periods_per_year, beta).
    """
    p = np.asarray(portfolio, dtype=np.float64) - risk_free
    b = np.asarray(benchmark, dtype=np.float64) - risk_free
    if p.size != b.size or p.size < 3:
        raise EmptySeries("series must have equal length >= 3")
    bc = b - b.mean()
    denom = float(bc @ bc)
    if denom == 0:
        raise DegenerateBenchmark("benchmark excess returns have zero variance")
    beta = float(bc @ (p - p.mean())) / denom
    alpha = float(p.mean() - beta * b.mean())
    return alpha * periods_per_year, beta


def win_rate(period_returns) -> float:
    r = np.asarray(period_returns, dtype=np.float64)
    if r.size == 0:
        raise EmptySeries("empty return series")
    return float((r > 0).mean() * 100.0)


def annualized_return(equity, periods_per_year: int = PERIODS_PER_YEAR) -> float:
    curve = np.asarray(equity, dtype=np.float64)
    if curve.size < 2:
        raise EmptySeries("need at least 2 equity points")
    if (curve <= 0).any():
        raise NonPositiveValues("equity curve must be positive")
    n = curve.size - 1
    return float((curve[-1] / curve[0]) ** (periods_per_year / n) - 1.0)


FIELDS = ("roi", "annualized_return", "sharpe", "sortino", "mdd", "turnover",
          "skew", "excess_kurtosis", "var_alpha", "cvar_alpha", "alpha",
          "beta", "win_rate")


@dataclass(frozen=True)
class MetricsBlock:
    roi: float
    annualized_return: float
    sharpe: float
    sortino: float
    mdd: float
    turnover: float
    skew: float
    excess_kurtosis: float
    var_alpha: float
    cvar_alpha: float
    alpha: float
    beta: float
    win_rate: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        # NaN marks metrics that are undefined for the run (e.g. no benchmark)
        return json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v)
                           for k, v in self.to_dict().items()}, indent=2)


def _maybe(fn, *args, **kwargs) -> float:
    try:
        return fn(*args, **kwargs)
    except Exception:
        return float("nan")


def compute_block(equity, period_returns, weights_history=None, benchmark=None,
                  risk_free: float = 0.0, var_level: float = 0.05,
                  periods_per_year: int = PERIODS_PER_YEAR) -> MetricsBlock:
    """Assemble the full metrics block; undefined entries become NaN."""
    r = np.asarray(period_returns, dtype=np.float64)
    eq = np.asarray(equity, dtype=np.float64)
    turn = float("nan")
    if weights_history is not None and len(weights_history) >= 2:
        turn = float(turnover_series(weights_history).mean())
    a = b = float("nan")
    if benchmark is not None:
        try:
            a, b = alpha_beta(r, benchmark, risk_free, periods_per_year)
        except Exception:
            pass
    v, cv = float("nan"), float("nan")
    try:
        v, cv = var_cvar(r, var_level)
    except Exception:
        pass
    return MetricsBlock(
        roi=_maybe(roi, eq[0], eq[-1]),
        annualized_return=_maybe(annualized_return, eq, periods_per_year),
        sharpe=_maybe(sharpe, r, risk_free, periods_per_year),
        sortino=_maybe(sortino, r, risk_free, periods_per_year),
        mdd=_maybe(max_drawdown, eq),
        turnover=turn,
        skew=_maybe(skewness, r),
        excess_kurtosis=_maybe(excess_kurtosis, r),
        var_alpha=v,
        cvar_alpha=cv,
        alpha=a,
        beta=b,
        win_rate=_maybe(win_rate, r),
    )
