from pathlib import Path

import pytest

from sharpefolio.data import load_panel
from sharpefolio.synthetic import make_panel

REPO = Path(__file__).resolve().parent.parent
FIXTURE_CSV = REPO / "data" / "fixture.csv"
DEFAULT_INI = REPO / "configs" / "default.ini"


@pytest.fixture(scope="session")
def fixture_panel():
    """The shipped deterministic panel (identical to make_panel())."""
    if FIXTURE_CSV.exists():
        return load_panel(FIXTURE_CSV)
    return make_panel()


@pytest.fixture(scope="session")
def fixture_csv():
    assert FIXTURE_CSV.exists(), "run scripts/make_fixture.py first"
    return FIXTURE_CSV


@pytest.fixture(scope="session")
def default_ini():
    assert DEFAULT_INI.exists()
    return DEFAULT_INI
