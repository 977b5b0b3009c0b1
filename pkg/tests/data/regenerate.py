"""Regenerate the committed CLI fixtures.

Run from the repository root:

    python3 tests/data/regenerate.py

Rewrites panel_200.csv (synthetic two-regime panel, seed 77) and
backtest_golden.csv (the byte-exact expected output of `sigcast backtest`
with backtest_config.json). The golden file is the determinism anchor:
regenerate it only when an intentional output-format or numeric change lands,
and say so in the commit.
"""
from __future__ import annotations

import json
import pathlib
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent
PANEL = HERE / "panel_200.csv"
CONFIG = HERE / "backtest_config.json"
GOLDEN = HERE / "backtest_golden.csv"

ORIGINS = ["2021-07-04", "2021-08-15"]


def main() -> None:
    subprocess.run(
        [sys.executable, "-m", "sigcast.cli", "synth", "--seed", "77", "--output", str(PANEL)],
        check=True,
    )
    config = {
        "schema": 1,
        "input": str(PANEL.relative_to(HERE.parent.parent)),  # run from the repo root
        "date_column": "date",
        "target_column": "y",
        "frequency": "weekly",
        "horizons": 6,
        "window": 8,
        "depth": 2,
        "gamma": 0.5,
        "lambda_grid": [1e-3, 1e-2],
        "rho_min": 0.1,
        "rho_max": 0.95,
        "weight_windows": "y",
    }
    CONFIG.write_text(json.dumps(config, indent=2) + "\n")
    subprocess.run(
        [
            sys.executable,
            "-m",
            "sigcast.cli",
            "backtest",
            "--config",
            str(CONFIG),
            "--origins",
            *ORIGINS,
            "--output",
            str(GOLDEN),
        ],
        check=True,
    )
    print(f"wrote {PANEL.name}, {CONFIG.name}, {GOLDEN.name}")


if __name__ == "__main__":
    main()
