"""Daily price-volume panel ingestion, cleaning, and return computation.

CSV schema (header mandatory): ``symbol,date,close,volume,market_cap``
one row per (asset, date), ISO-8601 dates, dot-decimal numbers,
market_cap may be empty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import EmptyPanel, InsufficientHistory, MissingFile, SchemaViolation

log = logging.getLogger(__name__)

CSV_COLUMNS = ["symbol", "date", "close", "volume", "market_cap"]


@dataclass(frozen=True)
class PricePanel:
    """Calendar-aligned close/volume/market-cap matrices.

    Arrays are (n_dates, n_assets); NaN marks a missing bar (only possible
    before cleaning).  Assets are kept in lexicographic order.
    """

    assets: tuple[str, ...]
    calendar: tuple[Date, ...]
    closes: np.ndarray
    volumes: np.ndarray
    caps: np.ndarray
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for arr in (self.closes, self.volumes, self.caps):
            arr.setflags(write=False)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_dates(self) -> int:
        return len(self.calendar)

    def date_index(self, date: Date) -> int:
        try:
            return self.calendar.index(date)
        except ValueError:
            from .errors import NoDataAtDate
            raise NoDataAtDate(f"{date} is not in the panel calendar")

    def asset_index(self, symbol: str) -> int:
        return self.assets.index(symbol)

    def subset(self, symbols) -> "PricePanel":
        idx = [self.assets.index(s) for s in symbols]
        return PricePanel(tuple(symbols), self.calendar,
                          self.closes[:, idx].copy(), self.volumes[:, idx].copy(),
                          self.caps[:, idx].copy())


@dataclass(frozen=True)
class ReturnPanel:
    """Simple close-to-close returns; row t covers calendar[t] -> calendar[t+1]."""

    assets: tuple[str, ...]
    calendar: tuple[Date, ...]  # dates of the returns (first panel date consumed)
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


def load_panel(path, format: str = "csv", max_missing_frac: float | None = None) -> PricePanel:
    """Load a price panel from CSV; optionally drop sparse assets on the way in.

    Assets with rows that fail to parse or violate the bar invariants
    (close <= 0, non-increasing dates) are rejected with a diagnostic.
    """
    if format != "csv":
        raise SchemaViolation(f"unsupported format: {format!r}")
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"no such file: {path}")
    try:
        df = pd.read_csv(path, dtype={"symbol": str, "date": str},
                         keep_default_na=False, na_values=[""],
                         float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise EmptyPanel(f"{path} is empty")
    if list(df.columns) != CSV_COLUMNS:
        raise SchemaViolation(
            f"expected header {','.join(CSV_COLUMNS)}, got {','.join(map(str, df.columns))}")
    if df.empty:
        raise EmptyPanel(f"{path} has a header but no rows")

    diagnostics: list[str] = []
    parsed: dict[str, list[tuple[Date, float, float, float]]] = {}
    rejected: set[str] = set()
    for i, row in enumerate(df.itertuples(index=False), start=2):
        sym = row.symbol
        if sym in rejected:
            continue
        try:
            d = Date.fromisoformat(str(row.date))
            close = float(row.close)
            volume = float(row.volume)
            cap = float(row.market_cap) if not pd.isna(row.market_cap) else np.nan
            if not np.isfinite(close) or close <= 0:
                raise ValueError(f"close must be > 0, got {row.close}")
            if not np.isfinite(volume) or volume < 0:
                raise ValueError(f"volume must be >= 0, got {row.volume}")
        except (TypeError, ValueError) as exc:
            diagnostics.append(f"row {i}: rejecting asset {sym!r}: {exc}")
            rejected.add(sym)
            parsed.pop(sym, None)
            continue
        parsed.setdefault(sym, []).append((d, close, volume, cap))

    for sym in list(parsed):
        dates = [r[0] for r in parsed[sym]]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            diagnostics.append(f"rejecting asset {sym!r}: dates not strictly increasing")
            del parsed[sym]

    if not parsed:
        raise EmptyPanel(f"no asset in {path} survived parsing: {diagnostics}")

    calendar = sorted({d for rows in parsed.values() for (d, *_rest) in rows})
    assets = sorted(parsed)
    pos = {d: i for i, d in enumerate(calendar)}
    closes = np.full((len(calendar), len(assets)), np.nan)
    volumes = np.full_like(closes, np.nan)
    caps = np.full_like(closes, np.nan)
    for j, sym in enumerate(assets):
        for d, close, volume, cap in parsed[sym]:
            i = pos[d]
            closes[i, j] = close
            volumes[i, j] = volume
            caps[i, j] = cap

    for msg in diagnostics:
        log.warning("%s: %s", path, msg)
    panel = PricePanel(tuple(assets), tuple(calendar), closes, volumes, caps,
                       tuple(diagnostics))
    if max_missing_frac is not None:
        panel = _drop_sparse(panel, max_missing_frac)
    return panel


def _drop_sparse(panel: PricePanel, max_missing_frac: float) -> PricePanel:
    missing = np.isnan(panel.closes).mean(axis=0)
    keep = [j for j in range(panel.n_assets) if missing[j] <= max_missing_frac]
    for j in range(panel.n_assets):
        if missing[j] > max_missing_frac:
            log.info("dropping %s: %.1f%% of bars missing", panel.assets[j],
                     100 * missing[j])
    if not keep:
        raise EmptyPanel("every asset exceeds the missing-bar threshold")
    return PricePanel(tuple(panel.assets[j] for j in keep), panel.calendar,
                      panel.closes[:, keep].copy(), panel.volumes[:, keep].copy(),
                      panel.caps[:, keep].copy(), panel.diagnostics)


def clean_panel(panel: PricePanel, max_missing_frac: float = 0.1,
                min_adv: float = 0.0) -> PricePanel:
    """Drop sparse or illiquid assets, then fill remaining gaps.

    Prices are forward-filled (leading gaps back-filled from the first
    observation), volumes zero-filled.  Idempotent.
    """
    if not (0 <= max_missing_frac < 1):
        raise ValueError(f"max_missing_frac must be in [0, 1), got {max_missing_frac}")
    if min_adv < 0:
        raise ValueError(f"min_adv must be >= 0, got {min_adv}")

    missing = np.isnan(panel.closes).mean(axis=0)
    adv = np.nan_to_num(panel.volumes, nan=0.0).mean(axis=0)
    keep = []
    for j in range(panel.n_assets):
        if missing[j] > max_missing_frac:
            log.info("dropping %s: missing fraction %.3f > %.3f", panel.assets[j],
                     missing[j], max_missing_frac)
        elif adv[j] < min_adv:
            log.info("dropping %s: ADV %.1f < %.1f", panel.assets[j], adv[j], min_adv)
        else:
            keep.append(j)
    if not keep:
        raise EmptyPanel("no asset survived cleaning")

    closes = panel.closes[:, keep].copy()
    volumes = panel.volumes[:, keep].copy()
    caps = panel.caps[:, keep].copy()
    n_fills = int(np.isnan(closes).sum())
    closes = _ffill(closes)
    closes = _bfill(closes)
    volumes = np.nan_to_num(volumes, nan=0.0)
    caps = _bfill(_ffill(caps))
    if n_fills:
        log.info("filled %d missing price bars", n_fills)
    return PricePanel(tuple(panel.assets[j] for j in keep), panel.calendar,
                      closes, volumes, caps, panel.diagnostics)


def _ffill(a: np.ndarray) -> np.ndarray:
    # standard gather trick; leading NaNs stay NaN (row 0 is pulled, which is NaN)
    mask = np.isnan(a)
    idx = np.where(mask, 0, np.arange(a.shape[0])[:, None])
    np.maximum.accumulate(idx, axis=0, out=idx)
    return a[idx, np.arange(a.shape[1])[None, :]]


def _bfill(a: np.ndarray) -> np.ndarray:
    return _ffill(a[::-1])[::-1]


def to_returns(panel: PricePanel) -> ReturnPanel:
    """Per-asset simple close-to-close returns; the first date is consumed."""
    if panel.n_dates < 2:
        raise InsufficientHistory("need at least 2 dates to compute returns")
    values = panel.closes[1:] / panel.closes[:-1] - 1.0
    return ReturnPanel(panel.assets, panel.calendar[1:], values)


def save_panel(panel: PricePanel, path) -> None:
    """Write a panel back out in the input CSV schema (round-trips cleanly)."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for j, sym in enumerate(panel.assets):
            for i, d in enumerate(panel.calendar):
                close = panel.closes[i, j]
                if np.isnan(close):
                    continue
                cap = panel.caps[i, j]
                cap_s = "" if np.isnan(cap) else repr(float(cap))
                fh.write(f"{sym},{d.isoformat()},{float(close)!r},"
                         f"{float(panel.volumes[i, j])!r},{cap_s}\n")
