"""Panel ingestion, cleaning, and round-trip tests."""

from datetime import date as Date

import numpy as np
import pytest

from sharpefolio.data import (PricePanel, clean_panel, load_panel, save_panel,
                              to_returns)
from sharpefolio.errors import (EmptyPanel, InsufficientHistory, MissingFile,
                                NoDataAtDate, SchemaViolation)
from sharpefolio.synthetic import make_panel

HEADER = "symbol,date,close,volume,market_cap\n"


def _write(tmp_path, body, name="panel.csv"):
    p = tmp_path / name
    p.write_text(HEADER + body)
    return p


def test_load_basic(tmp_path):
    p = _write(tmp_path,
               "B,2024-01-02,10.0,100,1000\n"
               "B,2024-01-03,11.0,120,1100\n"
               "A,2024-01-02,5.0,50,500\n"
               "A,2024-01-03,5.5,60,550\n")
    panel = load_panel(p)
    assert panel.assets == ("A", "B")  # lexicographic
    assert panel.calendar == (Date(2024, 1, 2), Date(2024, 1, 3))
    assert panel.closes[0, 1] == 10.0
    assert panel.caps[1, 0] == 550.0


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_panel(tmp_path / "nope.csv")


def test_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("symbol,date,close\nA,2024-01-02,1\n")
    with pytest.raises(SchemaViolation):
        load_panel(p)


def test_unsupported_format(tmp_path):
    with pytest.raises(SchemaViolation):
        load_panel(tmp_path / "x.csv", format="parquet")


def test_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(EmptyPanel):
        load_panel(p)


def test_header_only(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text(HEADER)
    with pytest.raises(EmptyPanel):
        load_panel(p)


def test_bad_row_rejects_only_that_asset(tmp_path):
    p = _write(tmp_path,
               "A,2024-01-02,-5.0,50,\n"      # close <= 0: reject A
               "A,2024-01-03,5.5,60,\n"
               "B,2024-01-02,10.0,100,\n"
               "B,2024-01-03,11.0,120,\n")
    panel = load_panel(p)
    assert panel.assets == ("B",)
    assert any("A" in d for d in panel.diagnostics)


def test_non_increasing_dates_rejected(tmp_path):
    p = _write(tmp_path,
               "A,2024-01-03,5.0,50,\n"
               "A,2024-01-02,5.5,60,\n"
               "B,2024-01-02,10.0,100,\n")
    panel = load_panel(p)
    assert panel.assets == ("B",)


def test_all_assets_rejected_raises(tmp_path):
    p = _write(tmp_path, "A,2024-01-02,0,50,\n")
    with pytest.raises(EmptyPanel):
        load_panel(p)


def test_missing_cap_is_nan(tmp_path):
    p = _write(tmp_path, "A,2024-01-02,5.0,50,\nA,2024-01-03,5.5,60,123\n")
    panel = load_panel(p)
    assert np.isnan(panel.caps[0, 0]) and panel.caps[1, 0] == 123.0


def test_missing_bar_is_nan_then_cleaned(tmp_path):
    p = _write(tmp_path,
               "A,2024-01-02,5.0,50,500\n"
               "A,2024-01-04,6.0,70,600\n"
               "B,2024-01-02,1.0,10,100\n"
               "B,2024-01-03,2.0,20,200\n"
               "B,2024-01-04,3.0,30,300\n")
    panel = load_panel(p)
    assert np.isnan(panel.closes[1, 0])
    clean = clean_panel(panel, max_missing_frac=0.5)
    assert clean.closes[1, 0] == 5.0      # forward fill
    assert clean.volumes[1, 0] == 0.0     # zero fill


def test_clean_drops_sparse_and_illiquid():
    panel = make_panel(n_assets=4, n_days=50, seed=0)
    closes = panel.closes.copy()
    closes[10:40, 1] = np.nan  # 60% missing
    sparse = PricePanel(panel.assets, panel.calendar, closes,
                        panel.volumes.copy(), panel.caps.copy())
    clean = clean_panel(sparse, max_missing_frac=0.1)
    assert panel.assets[1] not in clean.assets

    huge_adv = float(panel.volumes.max()) + 1
    with pytest.raises(EmptyPanel):
        clean_panel(panel, min_adv=huge_adv * 10)


def test_clean_is_idempotent():
    panel = make_panel(n_assets=5, n_days=60, seed=2)
    closes = panel.closes.copy()
    closes[0, 0] = np.nan  # leading gap -> backfilled
    dirty = PricePanel(panel.assets, panel.calendar, closes,
                       panel.volumes.copy(), panel.caps.copy())
    once = clean_panel(dirty)
    twice = clean_panel(once)
    np.testing.assert_array_equal(once.closes, twice.closes)
    np.testing.assert_array_equal(once.volumes, twice.volumes)
    assert not np.isnan(once.closes).any()


def test_save_load_round_trip(tmp_path):
    panel = make_panel(n_assets=6, n_days=40, seed=11)
    out = tmp_path / "rt.csv"
    save_panel(panel, out)
    back = load_panel(out)
    assert back.assets == panel.assets
    assert back.calendar == panel.calendar
    np.testing.assert_array_equal(back.closes, panel.closes)
    np.testing.assert_array_equal(back.volumes, panel.volumes)
    np.testing.assert_array_equal(back.caps, panel.caps)


def test_to_returns():
    panel = make_panel(n_assets=3, n_days=10, seed=1)
    rets = to_returns(panel)
    assert rets.values.shape == (9, 3)
    expect = panel.closes[1:] / panel.closes[:-1] - 1.0
    np.testing.assert_allclose(rets.values, expect)
    assert rets.calendar == panel.calendar[1:]


def test_to_returns_needs_two_dates():
    panel = make_panel(n_assets=2, n_days=10, seed=1)
    single = PricePanel(panel.assets, panel.calendar[:1], panel.closes[:1].copy(),
                        panel.volumes[:1].copy(), panel.caps[:1].copy())
    with pytest.raises(InsufficientHistory):
        to_returns(single)


def test_date_index_error():
    panel = make_panel(n_assets=2, n_days=10, seed=1)
    with pytest.raises(NoDataAtDate):
        panel.date_index(Date(1999, 1, 1))


def test_arrays_are_read_only():
    panel = make_panel(n_assets=2, n_days=10, seed=1)
    with pytest.raises(ValueError):
        panel.closes[0, 0] = 1.0
