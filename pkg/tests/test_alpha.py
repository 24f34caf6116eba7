"""Expression trees: round-trip, evaluation oracles, deterministic evolution."""

import numpy as np
import pandas as pd
import pytest

from sharpefolio.alpha import (AlphaExpr, GpConfig, const, eval_alpha, evolve,
                               parse, score_alpha, serialize, signal_to_weights,
                               validate, _warmup)
from sharpefolio.errors import DegenerateSignal, MalformedTree
from sharpefolio.synthetic import make_panel

SAMPLE = "(sub (rolling_mean price 5) (rolling_mean price 20))"


def test_parse_serialize_round_trip():
    cases = [
        SAMPLE,
        "price",
        "(neg volume)",
        "(rsi price 14)",
        "(macd price 12 26 9)",
        "(div_safe returns (rolling_std price 10))",
        "(rank_cross_sectional price volume)",
        "(add (delay price 3) (mul returns 2.0))",
    ]
    for text in cases:
        expr = parse(text)
        assert serialize(expr) == text
        assert parse(serialize(expr)) == expr


def test_parse_rejects_malformed():
    for bad in ["", "(", "(bogus price)", "(rsi price)", "(add price)",
                "(macd price 26 12 9)", "price extra", "(rsi price 0)"]:
        with pytest.raises(MalformedTree):
            parse(bad)


def test_validate_arity():
    with pytest.raises(MalformedTree):
        validate(AlphaExpr("add", (AlphaExpr("price"),)))
    with pytest.raises(MalformedTree):
        validate(AlphaExpr("rolling_mean", (AlphaExpr("price"),), ()))


def test_eval_rolling_mean_oracle():
    panel = make_panel(n_assets=4, n_days=60, seed=2, crash=False)
    out = eval_alpha(parse("(rolling_mean price 5)"), panel)
    ref = pd.DataFrame(panel.closes).rolling(5).mean().to_numpy()
    np.testing.assert_allclose(out, ref, rtol=1e-10, equal_nan=True)
    assert np.isnan(out[:4]).all()


def test_eval_delay_and_returns():
    panel = make_panel(n_assets=2, n_days=30, seed=3, crash=False)
    out = eval_alpha(parse("(delay price 3)"), panel)
    np.testing.assert_allclose(out[3:], panel.closes[:-3])
    assert np.isnan(out[:3]).all()
    r = eval_alpha(parse("returns"), panel)
    np.testing.assert_allclose(r[1:], panel.closes[1:] / panel.closes[:-1] - 1)


def test_eval_div_safe():
    panel = make_panel(n_assets=2, n_days=20, seed=4, crash=False)
    out = eval_alpha(parse("(div_safe price (sub price price))"), panel)
    np.testing.assert_array_equal(out, 0.0)  # |denominator| < eps -> 0


def test_eval_macd_warmup():
    panel = make_panel(n_assets=2, n_days=60, seed=5, crash=False)
    expr = parse("(macd price 12 26 9)")
    out = eval_alpha(expr, panel)
    warm = 26 + 9 - 2
    assert np.isnan(out[:warm]).all()
    assert not np.isnan(out[warm:]).any()
    assert _warmup(expr) == warm


def test_eval_rank_cross_sectional_bounds():
    panel = make_panel(n_assets=6, n_days=30, seed=6, crash=False)
    out = eval_alpha(parse("(rank_cross_sectional price volume)"), panel)
    assert np.nanmin(out) >= -1.0 and np.nanmax(out) <= 1.0


def test_signal_to_weights():
    w = signal_to_weights(np.array([3.0, 1.0, 2.0, 0.5, 0.1]),
                          ("A", "B", "C", "D", "E"))
    # top 20% of 5 assets = 1 name, the largest signal
    assert list(w.weights) == ["A"]
    assert w.weights["A"] == pytest.approx(1.0)
    assert signal_to_weights(np.full(4, np.nan), ("A", "B", "C", "D")) is None
    assert signal_to_weights(np.full(4, 2.0), ("A", "B", "C", "D")) is None


def test_score_degenerate_signal():
    panel = make_panel(n_assets=4, n_days=60, seed=7, crash=False)
    with pytest.raises(DegenerateSignal):
        score_alpha(const(1.0), panel, GpConfig())


def test_score_alpha_components(fixture_panel):
    cfg = GpConfig()
    score = score_alpha(parse(SAMPLE), fixture_panel, cfg)
    w_s, w_t, w_m = cfg.fitness_weights
    assert score.fitness == pytest.approx(
        w_s * score.sharpe - w_t * score.turnover - w_m * score.mdd)
    assert 0 <= score.mdd <= 1


def _small_cfg(**kw):
    base = dict(population=12, generations=3, max_depth=4, seed=123)
    base.update(kw)
    return GpConfig(**base)


def test_evolve_deterministic():
    panel = make_panel(n_assets=8, n_days=150, seed=1, crash=False)
    cfg = _small_cfg()
    a = evolve(panel, cfg)
    b = evolve(panel, cfg)
    assert [(serialize(e), s) for e, s in a] == [(serialize(e), s) for e, s in b]


def test_evolve_best_fitness_non_decreasing():
    panel = make_panel(n_assets=8, n_days=150, seed=1, crash=False)
    history = []
    evolve(panel, _small_cfg(), on_generation=lambda g, f: history.append(f))
    assert len(history) == 3
    assert all(b >= a for a, b in zip(history, history[1:]))


def test_evolve_retains_injected_optimum():
    panel = make_panel(n_assets=8, n_days=150, seed=1, crash=False)
    cfg = _small_cfg(generations=2)
    baseline = evolve(panel, cfg)
    best_fit = baseline[0][1].fitness
    # craft a seed that strictly dominates everything found so far by making
    # it the known champion from a longer independent run
    champion = baseline[0][0]
    ranked = evolve(panel, cfg, seeds=(champion,))
    assert ranked[0][1].fitness >= best_fit
    # elitism: a seeded individual at least as good is never lost
    fits = [s.fitness for _, s in ranked]
    assert fits == sorted(fits, reverse=True)


def test_evolve_depth_respected():
    panel = make_panel(n_assets=6, n_days=120, seed=2, crash=False)
    ranked = evolve(panel, _small_cfg(max_depth=3, generations=2))
    for expr, _ in ranked:
        assert expr.depth() <= 3


def test_gp_config_validation():
    with pytest.raises(ValueError):
        GpConfig(population=1)
    with pytest.raises(ValueError):
        GpConfig(mutation_rate=1.5)
