#!/usr/bin/env python3
"""Reproduce the benchmark data behind the published figures.

Runs the three preset configs (two-level weak driving, oscillator, two-level
strong driving) through the benchmark command and leaves CSV + JSON under
results/<name>/.  Plotting is out of scope; the CSVs are the contract.
"""

import sys
from pathlib import Path

from cpmagnus.cli import main

ROOT = Path(__file__).resolve().parent.parent
PRESETS = ["fig1ab", "fig1cd", "fig2"]


def run(out_root: Path) -> int:
    for name in PRESETS:
        config = ROOT / "configs" / f"{name}.toml"
        out = out_root / name
        print(f"== {name} ==")
        code = main(["benchmark", "--config", str(config), "--out", str(out)])
        if code != 0:
            return code
        code = main(["correct", "--config", str(config), "--out", str(out)])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "results"
    sys.exit(run(out_root))
