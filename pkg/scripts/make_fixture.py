#!/usr/bin/env python3
"""Regenerate data/fixture.csv from the seeded synthetic panel.

The fixture is deterministic (seed 7); rerunning this script reproduces the
shipped file byte-for-byte.
"""

import argparse
from pathlib import Path

from sharpefolio.data import save_panel
from sharpefolio.synthetic import make_panel


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None,
                        help="output path (default: <repo>/data/fixture.csv)")
    args = parser.parse_args()
    out = Path(args.out) if args.out else \
        Path(__file__).resolve().parent.parent / "data" / "fixture.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    panel = make_panel()
    save_panel(panel, out)
    print(f"wrote {panel.n_assets} assets x {panel.n_dates} days to {out}")


if __name__ == "__main__":
    main()
