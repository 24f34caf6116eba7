"""Genetic search over technical-operator expression trees.

Expressions evaluate to a per-asset daily signal panel; signals become
long-only weights by cross-sectional rank (top-quantile), are backtested
with no exposure control, and are scored by a weighted combination of
Sharpe, mean turnover, and maximum drawdown.  Evolution is tournament
selection + subtree crossover + point mutation with single-individual
elitism, followed by hill-climbing refinement of the champion.

Champions serialize to parenthesized prefix text, e.g.
``(sub (rolling_mean price 5) (rolling_mean price 20))``, and round-trip
through :func:`parse`.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import kernels, metrics
from .backtest import simulate
from .data import PricePanel, to_returns
from .errors import DegenerateSignal, InsufficientHistory, MalformedTree
from .optimizer import WeightVector

# op -> (n_children, param names); params are positive integers
LEAVES = ("price", "volume", "returns")
UNARY = {
    "neg": (), "abs": (),
    "rolling_mean": ("window",), "rolling_std": ("window",),
    "delay": ("days",), "rsi": ("window",),
    "macd": ("fast", "slow", "signal"),
}
BINARY = ("add", "sub", "mul", "div_safe", "rank_cross_sectional")

WINDOW_CHOICES = (2, 3, 5, 8, 10, 14, 20)
DELAY_CHOICES = (1, 2, 3, 5)
TOP_QUANTILE = 0.2
DIV_EPS = 1e-12


@dataclass(frozen=True)
class AlphaExpr:
    op: str
    children: tuple["AlphaExpr", ...] = ()
    params: tuple[float, ...] = ()

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def nodes(self) -> list["AlphaExpr"]:
        out = [self]
        for c in self.children:
            out.extend(c.nodes())
        return out

    def __str__(self) -> str:
        return serialize(self)


def const(value: float) -> AlphaExpr:
    return AlphaExpr("const", params=(float(value),))


def serialize(expr: AlphaExpr) -> str:
    if expr.op == "const":
        return repr(expr.params[0])
    if expr.op in LEAVES:
        return expr.op
    parts = [expr.op] + [serialize(c) for c in expr.children] + \
            [str(int(p)) for p in expr.params]
    return "(" + " ".join(parts) + ")"


def parse(text: str) -> AlphaExpr:
    """Inverse of :func:`serialize`."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise MalformedTree("empty expression")
    pos = 0

    def read() -> AlphaExpr:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            op = tokens[pos]
            pos += 1
            children: list[AlphaExpr] = []
            params: list[float] = []
            while tokens[pos] != ")":
                if tokens[pos] == "(" or (tokens[pos] in LEAVES):
                    children.append(read())
                else:
                    try:
                        params.append(float(tokens[pos]))
                    except ValueError:
                        raise MalformedTree(f"unexpected token {tokens[pos]!r}")
                    pos += 1
            pos += 1  # consume ')'
            # bare numbers before the closing paren may be constant leaves of
            # a binary op rather than params; re-split by arity
            return _build(op, children, params)
        if tok == ")":
            raise MalformedTree("unbalanced parentheses")
        if tok in LEAVES:
            return AlphaExpr(tok)
        try:
            return const(float(tok))
        except ValueError:
            raise MalformedTree(f"unknown leaf {tok!r}")

    try:
        expr = read()
    except IndexError:
        raise MalformedTree("unbalanced parentheses")
    if pos != len(tokens):
        raise MalformedTree("trailing tokens after expression")
    return validate(expr)


def _build(op: str, children: list[AlphaExpr], params: list[float]) -> AlphaExpr:
    if op in UNARY:
        n_params = len(UNARY[op])
        if len(children) == 0 and params:
            # the child itself was a numeric constant
            children = [const(params.pop(0))]
        return AlphaExpr(op, tuple(children), tuple(params[:]))
    if op in BINARY:
        while len(children) < 2 and params:
            children.append(const(params.pop(0)))
        return AlphaExpr(op, tuple(children), tuple(params))
    raise MalformedTree(f"unknown operator {op!r}")


def validate(expr: AlphaExpr) -> AlphaExpr:
    if expr.op == "const":
        if len(expr.params) != 1 or expr.children:
            raise MalformedTree("const takes exactly one value")
        return expr
    if expr.op in LEAVES:
        if expr.children or expr.params:
            raise MalformedTree(f"{expr.op} is a leaf")
        return expr
    if expr.op in UNARY:
        want = len(UNARY[expr.op])
        if len(expr.children) != 1 or len(expr.params) != want:
            raise MalformedTree(
                f"{expr.op} wants 1 child and {want} parameter(s), "
                f"got {len(expr.children)}/{len(expr.params)}")
        if any(p < 1 or p != int(p) for p in expr.params):
            raise MalformedTree(f"{expr.op} parameters must be integers >= 1")
        if expr.op == "macd" and expr.params[0] >= expr.params[1]:
            raise MalformedTree("macd needs fast < slow")
    elif expr.op in BINARY:
        if len(expr.children) != 2 or expr.params:
            raise MalformedTree(f"{expr.op} wants exactly 2 children")
    else:
        raise MalformedTree(f"unknown operator {expr.op!r}")
    for c in expr.children:
        validate(c)
    return expr


# -- evaluation ---------------------------------------------------------------

def eval_alpha(expr: AlphaExpr, panel: PricePanel) -> np.ndarray:
    """Evaluate bottom-up into a (n_dates, n_assets) signal matrix.

    Warm-up rows (longest window in the tree) are NaN; safe division
    returns 0 where |denominator| < 1e-12.
    """
    validate(expr)
    if panel.n_dates <= _warmup(expr):
        raise InsufficientHistory(
            f"panel has {panel.n_dates} bars, expression needs > {_warmup(expr)}")
    return _eval(expr, panel)


def _warmup(expr: AlphaExpr) -> int:
    own = 0
    if expr.op in ("rolling_mean", "rolling_std"):
        own = int(expr.params[0]) - 1
    elif expr.op == "delay":
        own = int(expr.params[0])
    elif expr.op == "rsi":
        own = int(expr.params[0])
    elif expr.op == "macd":
        own = int(expr.params[1]) + int(expr.params[2]) - 2
    elif expr.op == "returns":
        own = 1
    child = max((_warmup(c) for c in expr.children), default=0)
    return own + child


def _eval(expr: AlphaExpr, panel: PricePanel) -> np.ndarray:
    op = expr.op
    if op == "price":
        return panel.closes.astype(np.float64, copy=True)
    if op == "volume":
        return panel.volumes.astype(np.float64, copy=True)
    if op == "returns":
        out = np.full_like(panel.closes, np.nan, dtype=np.float64)
        out[1:] = panel.closes[1:] / panel.closes[:-1] - 1.0
        return out
    if op == "const":
        return np.full(panel.closes.shape, expr.params[0])

    a = _eval(expr.children[0], panel)
    if op == "neg":
        return -a
    if op == "abs":
        return np.abs(a)
    if op == "rolling_mean" or op == "rolling_std":
        w = int(expr.params[0])
        out = np.full_like(a, np.nan)
        for j in range(a.shape[1]):
            col = a[:, j]
            valid = ~np.isnan(col)
            start = int(np.argmax(valid)) if valid.any() else col.size
            seg = col[start:]
            if seg.size >= w and not np.isnan(seg).any():
                mean, std = kernels.rolling_mean_std(seg, w)
                out[start + w - 1:, j] = mean if op == "rolling_mean" else std
        return out
    if op == "delay":
        d = int(expr.params[0])
        out = np.full_like(a, np.nan)
        out[d:] = a[:-d]
        return out
    if op == "rsi":
        w = int(expr.params[0])
        out = np.full_like(a, np.nan)
        for j in range(a.shape[1]):
            col = a[:, j]
            valid = ~np.isnan(col)
            start = int(np.argmax(valid)) if valid.any() else col.size
            seg = col[start:]
            if seg.size > w and not np.isnan(seg).any():
                out[start:, j] = kernels.wilder_rsi(seg, w)
        return out
    if op == "macd":
        fast, slow, sig = (int(p) for p in expr.params)
        out = np.full_like(a, np.nan)
        for j in range(a.shape[1]):
            col = a[:, j]
            valid = ~np.isnan(col)
            start = int(np.argmax(valid)) if valid.any() else col.size
            seg = col[start:]
            if seg.size >= slow + sig - 1 and not np.isnan(seg).any():
                line = kernels.ewma(seg, 2.0 / (fast + 1)) - kernels.ewma(seg, 2.0 / (slow + 1))
                signal = kernels.ewma(line, 2.0 / (sig + 1))
                hist = line - signal
                hist[:slow + sig - 2] = np.nan
                out[start:, j] = hist
        return out

    b = _eval(expr.children[1], panel)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div_safe":
        out = np.zeros_like(a)
        small = np.abs(b) < DIV_EPS
        np.divide(a, b, out=out, where=~small)
        out[np.isnan(a) | np.isnan(b)] = np.nan
        return out
    if op == "rank_cross_sectional":
        # spread of the two legs' cross-sectional ranks, in [-1, 1]
        return _xs_rank(a) - _xs_rank(b)
    raise MalformedTree(f"unknown operator {op!r}")


def _xs_rank(a: np.ndarray) -> np.ndarray:
    """Row-wise rank normalized to [0, 1]; NaN-aware."""
    out = np.full_like(a, np.nan)
    for i in range(a.shape[0]):
        row = a[i]
        ok = ~np.isnan(row)
        n = int(ok.sum())
        if n == 0:
            continue
        if n == 1:
            out[i, ok] = 0.5
            continue
        order = np.argsort(np.argsort(row[ok], kind="stable"), kind="stable")
        out[i, ok] = order / (n - 1)
    return out


# -- scoring -------------------------------------------------------------------

@dataclass(frozen=True)
class GpConfig:
    population: int = 50
    generations: int = 10
    max_depth: int = 6
    mutation_rate: float = 0.3
    crossover_rate: float = 0.7
    seed: int = 0
    fitness_weights: tuple[float, float, float] = (1.0, 0.1, 1.0)  # sharpe, turnover, mdd
    cost_bps_per_side: float = 5.0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError(f"population must be >= 2, got {self.population}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")
        if not (0 <= self.mutation_rate <= 1 and 0 <= self.crossover_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")


@dataclass(frozen=True)
class AlphaScore:
    sharpe: float
    turnover: float
    mdd: float
    fitness: float


def signal_to_weights(signal_row: np.ndarray, assets) -> WeightVector | None:
    """Long-only weights from one day's cross-sectional signal.

    Keeps the top quantile by rank, weights proportional to rank position.
    Returns None when the row is degenerate (all-NaN or constant).
    """
    ok = ~np.isnan(signal_row)
    n = int(ok.sum())
    if n == 0:
        return None
    vals = signal_row[ok]
    if np.all(vals == vals[0]):
        return None
    syms = [a for a, m in zip(assets, ok) if m]
    order = sorted(range(n), key=lambda i: (-vals[i], syms[i]))
    keep = max(1, int(math.ceil(TOP_QUANTILE * n)))
    chosen = order[:keep]
    ranks = np.arange(keep, 0, -1, dtype=np.float64)  # best gets the largest
    ranks /= ranks.sum()
    return WeightVector({syms[i]: float(r) for i, r in zip(chosen, ranks)})


def score_alpha(expr: AlphaExpr, panel: PricePanel, cfg: GpConfig) -> AlphaScore:
    """Backtest the expression (no exposure control) and combine the metrics."""
    signal = eval_alpha(expr, panel)
    schedule: dict[int, WeightVector | None] = {}
    any_usable = False
    first = _warmup(expr) + 1
    for idx in range(max(first, 1), panel.n_dates):
        wv = signal_to_weights(signal[idx - 1], panel.assets)
        schedule[idx] = wv
        if wv is not None:
            any_usable = True
    if not any_usable:
        raise DegenerateSignal(f"{serialize(expr)} is cross-sectionally constant")

    def policy(idx: int, prev: WeightVector) -> WeightVector:
        wv = schedule.get(idx)
        return wv if wv is not None else WeightVector.empty()

    start = panel.calendar[min(schedule)] if schedule else panel.calendar[1]
    report = simulate(panel, start, panel.calendar[-1], policy,
                      cost_bps_per_side=cfg.cost_bps_per_side, risk_cfg=None)
    try:
        sh = metrics.sharpe(report.account_returns)
    except Exception:
        sh = 0.0
    try:
        turn = float(metrics.turnover_series(report.weights_history).mean())
    except Exception:
        turn = 0.0
    mdd = metrics.max_drawdown(report.equity_curve)
    w_s, w_t, w_m = cfg.fitness_weights
    return AlphaScore(sh, turn, mdd, w_s * sh - w_t * turn - w_m * mdd)


# -- evolution ------------------------------------------------------------------

def _random_leaf(rng: random.Random) -> AlphaExpr:
    kind = rng.randrange(4)
    if kind < 3:
        return AlphaExpr(LEAVES[kind])
    return const(round(rng.uniform(-2.0, 2.0), 3))


def _random_params(op: str, rng: random.Random) -> tuple[float, ...]:
    names = UNARY[op]
    if op == "delay":
        return (float(rng.choice(DELAY_CHOICES)),)
    if op == "macd":
        fast = rng.choice((5, 8, 12))
        slow = rng.choice((17, 21, 26))
        sig = rng.choice((5, 9))
        return (float(fast), float(slow), float(sig))
    if names:
        return (float(rng.choice(WINDOW_CHOICES)),)
    return ()


def _random_tree(rng: random.Random, depth: int, full: bool) -> AlphaExpr:
    if depth <= 1 or (not full and rng.random() < 0.3):
        return _random_leaf(rng)
    ops = list(UNARY) + list(BINARY)
    op = rng.choice(ops)
    if op in UNARY:
        return AlphaExpr(op, (_random_tree(rng, depth - 1, full),),
                         _random_params(op, rng))
    return AlphaExpr(op, (_random_tree(rng, depth - 1, full),
                          _random_tree(rng, depth - 1, full)))


def _truncate(expr: AlphaExpr, budget: int, rng: random.Random) -> AlphaExpr:
    if budget <= 1 and expr.children:
        return _random_leaf(rng)
    if not expr.children:
        return expr
    kids = tuple(_truncate(c, budget - 1, rng) for c in expr.children)
    return AlphaExpr(expr.op, kids, expr.params)


def _crossover(a: AlphaExpr, b: AlphaExpr, rng: random.Random,
               max_depth: int) -> AlphaExpr:
    donor = rng.choice(b.nodes())
    target_nodes = a.nodes()
    spot = rng.randrange(len(target_nodes))

    counter = [0]

    def rebuild(node: AlphaExpr) -> AlphaExpr:
        here = counter[0]
        counter[0] += 1
        if here == spot:
            for c in node.children:
                _skip(c)
            return donor
        kids = tuple(rebuild(c) for c in node.children)
        return AlphaExpr(node.op, kids, node.params)

    def _skip(node: AlphaExpr):
        counter[0] += 1
        for c in node.children:
            _skip(c)

    out = rebuild(a)
    if out.depth() > max_depth:
        out = _truncate(out, max_depth, rng)
    return out


def _mutate(expr: AlphaExpr, rng: random.Random, max_depth: int) -> AlphaExpr:
    nodes = expr.nodes()
    spot = rng.randrange(len(nodes))
    counter = [0]

    def rebuild(node: AlphaExpr) -> AlphaExpr:
        here = counter[0]
        counter[0] += 1
        if here == spot:
            for c in node.children:
                _skip(c)
            return _tweak(node, rng)
        kids = tuple(rebuild(c) for c in node.children)
        return AlphaExpr(node.op, kids, node.params)

    def _skip(node: AlphaExpr):
        counter[0] += 1
        for c in node.children:
            _skip(c)

    out = rebuild(expr)
    if out.depth() > max_depth:
        out = _truncate(out, max_depth, rng)
    return out


def _tweak(node: AlphaExpr, rng: random.Random) -> AlphaExpr:
    """Local change: new params, same-arity operator swap, or fresh leaf."""
    if node.op == "const":
        return const(round(node.params[0] + rng.uniform(-0.5, 0.5), 3))
    if not node.children:
        return _random_leaf(rng)
    roll = rng.random()
    if node.op in UNARY:
        if roll < 0.5 and UNARY[node.op]:
            return AlphaExpr(node.op, node.children, _random_params(node.op, rng))
        op = rng.choice(list(UNARY))
        return AlphaExpr(op, node.children, _random_params(op, rng))
    op = rng.choice(BINARY)
    return AlphaExpr(op, node.children)


def _score_or_worst(expr: AlphaExpr, panel: PricePanel, cfg: GpConfig,
                    cache: dict) -> AlphaScore:
    key = serialize(expr)
    if key not in cache:
        try:
            cache[key] = score_alpha(expr, panel, cfg)
        except Exception:
            cache[key] = AlphaScore(float("nan"), float("nan"), float("nan"),
                                    -float("inf"))
    return cache[key]


def evolve(panel: PricePanel, cfg: GpConfig, seeds=(),
           on_generation=None) -> list[tuple[AlphaExpr, AlphaScore]]:
    """Run the full evolutionary loop; deterministic under a fixed seed.

    ``seeds`` are expressions injected into the initial population (handy
    for regression tests and warm starts).  ``on_generation(gen, best)``
    is called after each generation with the current best fitness.
    """
    rng = random.Random(cfg.seed)
    cache: dict[str, AlphaScore] = {}

    population: list[AlphaExpr] = [validate(s) for s in seeds][:cfg.population]
    i = 0
    while len(population) < cfg.population:
        depth = 2 + i % max(cfg.max_depth - 1, 1)
        population.append(_truncate(_random_tree(rng, depth, full=i % 2 == 0),
                                    cfg.max_depth, rng))
        i += 1

    def fitness(e: AlphaExpr) -> float:
        return _score_or_worst(e, panel, cfg, cache).fitness

    def sort_pop(pop):
        return sorted(pop, key=lambda e: (-fitness(e), serialize(e)))

    population = sort_pop(population)
    for gen in range(cfg.generations):
        nxt = [population[0]]  # elitism
        while len(nxt) < cfg.population:
            a = _tournament(population, rng, fitness)
            child = a
            if rng.random() < cfg.crossover_rate:
                b = _tournament(population, rng, fitness)
                child = _crossover(a, b, rng, cfg.max_depth)
            if rng.random() < cfg.mutation_rate:
                child = _mutate(child, rng, cfg.max_depth)
            nxt.append(child)
        population = sort_pop(nxt)
        if on_generation is not None:
            on_generation(gen, fitness(population[0]))

    champion = _hill_climb(population[0], panel, cfg, rng, cache)
    population[0] = champion
    ranked = sort_pop(population)
    return [(e, _score_or_worst(e, panel, cfg, cache)) for e in ranked]


def _tournament(population, rng: random.Random, fitness, size: int = 3) -> AlphaExpr:
    picks = [population[rng.randrange(len(population))] for _ in range(size)]
    return max(picks, key=fitness)


def _hill_climb(expr: AlphaExpr, panel: PricePanel, cfg: GpConfig,
                rng: random.Random, cache: dict,
                patience: int = 50) -> AlphaExpr:
    best = expr
    best_fit = _score_or_worst(best, panel, cfg, cache).fitness
    rejections = 0
    while rejections < patience:
        candidate = _mutate(best, rng, cfg.max_depth)
        fit = _score_or_worst(candidate, panel, cfg, cache).fitness
        if fit > best_fit:
            best, best_fit = candidate, fit
            rejections = 0
        else:
            rejections += 1
    return best
