"""Drawdown-tiered exposure control with a post-stop cooldown.

The controller watches the equity curve, maps the current drawdown to an
exposure multiplier through an ordered tier table (>= threshold semantics),
and pins exposure to zero for ``cooldown_days`` bars after a hard stop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, NonPositiveEquity

# default tier table; the conservative preset caps the middle band at 40%
DEFAULT_TIERS = ((0.06, 0.0), (0.04, 0.6), (0.02, 0.8))
CONSERVATIVE_TIERS = ((0.06, 0.0), (0.04, 0.4), (0.02, 0.8))


@dataclass(frozen=True)
class RiskConfig:
    tiers: tuple[tuple[float, float], ...] = DEFAULT_TIERS
    cooldown_days: int = 1

    def __post_init__(self):
        thresholds = [t for t, _ in self.tiers]
        exposures = [e for _, e in self.tiers]
        if thresholds != sorted(thresholds, reverse=True) or len(set(thresholds)) != len(thresholds):
            raise ValueError("tier thresholds must be strictly decreasing")
        if exposures != sorted(exposures):
            raise ValueError("tier exposures must be non-decreasing as thresholds decrease")
        if any(not (0 <= x <= 1) for x in thresholds + exposures):
            raise ValueError("tier thresholds and exposures must lie in [0, 1]")
        if self.cooldown_days < 0:
            raise ValueError(f"cooldown_days must be >= 0, got {self.cooldown_days}")

    def exposure_for(self, drawdown: float) -> float:
        for threshold, exposure in self.tiers:
            if drawdown >= threshold:
                return exposure
        return 1.0


@dataclass(frozen=True)
class RiskState:
    peak: float = 0.0
    drawdown: float = 0.0
    exposure: float = 1.0
    cooldown_remaining: int = 0


def update(state: RiskState, equity: float, cfg: RiskConfig) -> RiskState:
    """Advance the controller by one bar of closing equity.

    Peak is raised before the drawdown is measured, so a fresh high can
    never register as a drawdown.  Entering the zero-exposure tier arms the
    cooldown; while it runs, exposure stays pinned at zero regardless of
    equity.
    """
    if not (equity > 0):
        raise NonPositiveEquity(f"equity must be > 0, got {equity}")
    peak = max(state.peak, equity)
    drawdown = (peak - equity) / peak
    if state.cooldown_remaining > 0:
        return RiskState(peak, drawdown, 0.0, state.cooldown_remaining - 1)
    exposure = cfg.exposure_for(drawdown)
    cooldown = cfg.cooldown_days if exposure == 0.0 else 0
    return RiskState(peak, drawdown, exposure, cooldown)


def signed_drawdown(equity_curve, t: int) -> float:
    """(V_t - running peak) / running peak; always <= 0."""
    curve = np.asarray(equity_curve, dtype=np.float64)
    if not (0 <= t < curve.size):
        raise IndexOutOfRange(f"index {t} outside [0, {curve.size})")
    peak = float(curve[:t + 1].max())
    return (float(curve[t]) - peak) / peak
