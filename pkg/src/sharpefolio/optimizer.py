"""Weight construction: inverse-vol/Sharpe blend, constrained mean-variance,
turnover capping, and the efficient frontier.

The quadratic subproblems are solved by accelerated projected gradient on
the capped simplex {sum w = 1, l <= w <= u} (see kernels.pgd_quadratic);
max-return is solved exactly by greedy fill and max-Sharpe by a scan over
the risk-aversion coefficient followed by golden-section refinement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np

from . import kernels
from .data import ReturnPanel
from .errors import (Infeasible, InsufficientHistory, NoAssets, NotConverged,
                     SingularStats)

log = logging.getLogger(__name__)

MAX_ITER = 10_000
TOL = 1e-10


@dataclass(frozen=True)
class AssetStats:
    symbols: tuple[str, ...]
    mu: np.ndarray          # per-period expected return
    sigma: np.ndarray       # per-period volatility
    sharpe: np.ndarray      # (mu - rf) / sigma, NaN for degenerate assets
    cov: np.ndarray         # sample covariance, (n, n)
    risk_free: float = 0.0
    degenerate: tuple[str, ...] = ()  # zero-variance assets, excluded from the blend

    @property
    def n(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class WeightVector:
    weights: dict[str, float]
    date: Date | None = None

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(self.weights)

    def as_array(self, symbols) -> np.ndarray:
        return np.array([self.weights.get(s, 0.0) for s in symbols])

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def turnover(self, other: "WeightVector") -> float:
        syms = set(self.weights) | set(other.weights)
        return float(sum(abs(self.weights.get(s, 0.0) - other.weights.get(s, 0.0))
                         for s in syms))

    @staticmethod
    def empty(date: Date | None = None) -> "WeightVector":
        return WeightVector({}, date)


@dataclass(frozen=True)
class OptimizerConfig:
    risk_aversion: float = 5.0          # lambda in the utility objective
    r_min: float | None = None          # return floor for the min-risk objective
    bound_lower: float = 0.0
    bound_upper: float = 1.0
    turnover_cap: float = 2.0           # 2.0 == unconstrained (max possible)
    blend_alpha: float = 0.5            # inverse-vol vs Sharpe mixing fraction

    def __post_init__(self):
        if self.risk_aversion <= 0:
            raise ValueError(f"risk_aversion must be > 0, got {self.risk_aversion}")
        if not (0 <= self.blend_alpha <= 1):
            raise ValueError(f"blend_alpha must be in [0, 1], got {self.blend_alpha}")
        if self.turnover_cap < 0:
            raise ValueError(f"turnover_cap must be >= 0, got {self.turnover_cap}")
        if not (0 <= self.bound_lower <= self.bound_upper <= 1):
            raise ValueError("bounds must satisfy 0 <= lower <= upper <= 1")


def estimate_stats(returns: ReturnPanel, window: int, risk_free: float = 0.0,
                   symbols=None) -> AssetStats:
    """Sample mean / covariance / Sharpe over the trailing window."""
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    if symbols is None:
        symbols = returns.assets
    cols = [returns.assets.index(s) for s in symbols]
    block = returns.values[-window:, cols]
    if block.shape[0] < window or np.isnan(block).any():
        raise InsufficientHistory(f"need {window} clean observations per asset")
    mu = block.mean(axis=0)
    if len(cols) == 1:
        var = block.var(ddof=1, axis=0)
        cov = var.reshape(1, 1)
    else:
        cov = np.cov(block, rowvar=False, ddof=1)
    sigma = np.sqrt(np.diag(cov))
    sharpe = np.full(len(cols), np.nan)
    ok = sigma > 0
    sharpe[ok] = (mu[ok] - risk_free) / sigma[ok]
    degenerate = tuple(np.asarray(symbols)[~ok])
    if degenerate:
        log.warning("zero-variance assets excluded from blend: %s", degenerate)
    return AssetStats(tuple(symbols), mu, sigma, sharpe, cov, risk_free, degenerate)


def blend_weights(stats: AssetStats, date: Date | None = None,
                  alpha: float = 0.5) -> WeightVector:
    """Convex mix of normalized inverse-volatility and positive-Sharpe weights."""
    keep = [i for i, s in enumerate(stats.symbols) if s not in stats.degenerate]
    if not keep:
        if stats.n == 0:
            raise NoAssets("blend needs at least one asset")
        raise SingularStats("all assets have zero variance")
    syms = [stats.symbols[i] for i in keep]
    sigma = stats.sigma[keep]
    sharpe = stats.sharpe[keep]

    inv_vol = (1.0 / sigma)
    w_iv = inv_vol / inv_vol.sum()
    s_plus = np.maximum(sharpe, 0.0)
    if s_plus.sum() > 0:
        w_s = s_plus / s_plus.sum()
    else:
        log.info("no positive-Sharpe asset: Sharpe leg degrades to equal weight")
        w_s = np.full(len(keep), 1.0 / len(keep))
    w = alpha * w_iv + (1.0 - alpha) * w_s
    w = w / w.sum()
    return WeightVector(dict(zip(syms, w.tolist())), date)


def _bounds(cfg: OptimizerConfig, n: int):
    lo = np.full(n, cfg.bound_lower)
    hi = np.full(n, cfg.bound_upper)
    if lo.sum() > 1 + 1e-12 or hi.sum() < 1 - 1e-12:
        raise Infeasible(
            f"bounds conflict: sum(lower)={lo.sum():.4f}, sum(upper)={hi.sum():.4f} "
            "cannot bracket a fully invested portfolio")
    return lo, hi


def _solve_quadratic(cov: np.ndarray, mu: np.ndarray, lam: float,
                     lo: np.ndarray, hi: np.ndarray,
                     strict: bool = True) -> np.ndarray:
    """max mu'w - lam w'Sigma'w over the capped simplex."""
    A = 2.0 * lam * cov
    b = -mu
    lipschitz = max(float(np.linalg.eigvalsh(A).max()), 1e-12) if cov.size else 1e-12
    w0 = np.full(mu.size, 1.0 / mu.size)
    w, iters, change = kernels.pgd_quadratic(A, b, lo, hi, lipschitz,
                                             MAX_ITER, TOL, w0)
    if strict and change >= TOL:
        raise NotConverged(
            f"projected gradient stopped after {iters} iterations, "
            f"weight change {change:.3e} >= {TOL:.0e}", gap=change)
    return w


def _max_return(mu: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                symbols) -> np.ndarray:
    # exact greedy fill: start at the lower bounds, pour the remaining budget
    # into assets in descending expected return (symbol tie-break)
    w = lo.copy()
    budget = 1.0 - w.sum()
    order = sorted(range(mu.size), key=lambda i: (-mu[i], symbols[i]))
    for i in order:
        take = min(hi[i] - lo[i], budget)
        w[i] += take
        budget -= take
        if budget <= 1e-15:
            break
    return w


def solve_mean_variance(stats: AssetStats, cfg: OptimizerConfig,
                        objective: str = "utility",
                        date: Date | None = None) -> WeightVector:
    """Optimize the chosen objective subject to budget, no-short, and bounds."""
    if stats.n == 0:
        raise NoAssets("optimizer needs at least one asset")
    lo, hi = _bounds(cfg, stats.n)
    mu, cov = stats.mu, stats.cov

    if objective == "max_return":
        w = _max_return(mu, lo, hi, stats.symbols)
    elif objective == "utility":
        w = _solve_quadratic(cov, mu, cfg.risk_aversion, lo, hi)
    elif objective == "min_risk":
        w = _min_risk(stats, cfg, lo, hi)
    elif objective == "max_sharpe":
        w = _max_sharpe(stats, lo, hi)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return WeightVector(dict(zip(stats.symbols, w.tolist())), date)


def _min_risk(stats: AssetStats, cfg: OptimizerConfig,
              lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mu, cov = stats.mu, stats.cov
    # global minimum variance first; if it already clears the floor, done
    w = _solve_quadratic(cov, np.zeros_like(mu), 1.0, lo, hi)
    if cfg.r_min is None or mu @ w >= cfg.r_min - 1e-12:
        return w
    best = _max_return(mu, lo, hi, stats.symbols)
    if mu @ best < cfg.r_min - 1e-12:
        raise Infeasible(
            f"r_min={cfg.r_min:.6g} exceeds the maximum achievable expected "
            f"return {mu @ best:.6g} under the bounds")
    # the return floor binds: walk the frontier by bisection on lambda until
    # the utility solution's expected return hits r_min
    lam_lo, lam_hi = 1e-9, 1e9
    for _ in range(200):
        lam = math.sqrt(lam_lo * lam_hi)
        w = _solve_quadratic(cov, mu, lam, lo, hi, strict=False)
        if mu @ w >= cfg.r_min:
            lam_lo = lam
        else:
            lam_hi = lam
        if lam_hi / lam_lo < 1 + 1e-12:
            break
    return _solve_quadratic(cov, mu, lam_lo, lo, hi, strict=False)


def _portfolio_sharpe(w, mu, cov, risk_free):
    var = float(w @ cov @ w)
    if var <= 0:
        return -np.inf
    return (float(mu @ w) - risk_free) / math.sqrt(var)


def _max_sharpe(stats: AssetStats, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mu, cov, rf = stats.mu, stats.cov, stats.risk_free
    lams = np.logspace(-3, 3, 50)
    scores = []
    sols = []
    for lam in lams:
        w = _solve_quadratic(cov, mu, lam, lo, hi, strict=False)
        sols.append(w)
        scores.append(_portfolio_sharpe(w, mu, cov, rf))
    k = int(np.argmax(scores))
    # golden-section refinement on log-lambda around the best bracket
    a = math.log(lams[max(k - 1, 0)])
    b = math.log(lams[min(k + 1, len(lams) - 1)])
    phi = (math.sqrt(5) - 1) / 2
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc = _portfolio_sharpe(_solve_quadratic(cov, mu, math.exp(c), lo, hi, strict=False), mu, cov, rf)
    fd = _portfolio_sharpe(_solve_quadratic(cov, mu, math.exp(d), lo, hi, strict=False), mu, cov, rf)
    for _ in range(40):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _portfolio_sharpe(_solve_quadratic(cov, mu, math.exp(c), lo, hi, strict=False), mu, cov, rf)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _portfolio_sharpe(_solve_quadratic(cov, mu, math.exp(d), lo, hi, strict=False), mu, cov, rf)
    lam_star = math.exp(0.5 * (a + b))
    w_star = _solve_quadratic(cov, mu, lam_star, lo, hi, strict=False)
    if _portfolio_sharpe(w_star, mu, cov, rf) < scores[k]:
        return sols[k]
    return w_star


def apply_turnover_cap(prev: WeightVector, target: WeightVector,
                       t_max: float) -> WeightVector:
    """Scale the move from prev toward target so turnover never exceeds t_max."""
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    syms = sorted(set(prev.weights) | set(target.weights))
    p = prev.as_array(syms)
    t = target.as_array(syms)
    total = float(np.abs(t - p).sum())
    if total <= t_max:
        return target
    theta = t_max / total if total > 0 else 0.0
    w = p + theta * (t - p)
    s = w.sum()
    if s > 0:
        w = w / s
    out = {sym: float(x) for sym, x in zip(syms, w) if abs(x) > 1e-15}
    return WeightVector(out, target.date)


@dataclass(frozen=True)
class FrontierPoint:
    risk_aversion: float
    expected_return: float
    variance: float
    weights: WeightVector | None
    error: str | None = None


def efficient_frontier(stats: AssetStats, lambdas, cfg: OptimizerConfig | None = None,
                       date: Date | None = None) -> list[FrontierPoint]:
    """One utility solution per risk-aversion value; failed points are marked."""
    lambdas = list(lambdas)
    if any(l <= 0 for l in lambdas):
        raise ValueError("lambdas must be positive")
    if lambdas != sorted(lambdas):
        raise ValueError("lambdas must be sorted ascending")
    base = cfg or OptimizerConfig()
    points = []
    for lam in lambdas:
        try:
            lo, hi = _bounds(base, stats.n)
            w = _solve_quadratic(stats.cov, stats.mu, lam, lo, hi)
            wv = WeightVector(dict(zip(stats.symbols, w.tolist())), date)
            points.append(FrontierPoint(lam, float(stats.mu @ w),
                                        float(w @ stats.cov @ w), wv))
        except (Infeasible, NotConverged) as exc:
            points.append(FrontierPoint(lam, np.nan, np.nan, None, str(exc)))
    return points
