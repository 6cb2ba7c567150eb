#!/usr/bin/env python3
"""Convergence-order study: propagator and coefficient-correction deviations
over a geometric frequency sweep, for both bundled models.

Writes sweep.csv per model under results/convergence/.  The columns contain
one-period deviations ||V(T) - V_n(T)||, ||V(T) - Vt_n(T)|| and the
coefficient gaps ||c_n(w) - ct_n(w)|| per requested order.
"""

import sys
import tempfile
from pathlib import Path

from cpmagnus.cli import main

ROOT = Path(__file__).resolve().parent.parent

TWO_LEVEL = """
orders = [0, 1, 2]
normalize_vectors = true

[model]
kind = "two_level"
omega = 1.0
omega0_abs = 1.0
omega_s_abs = 0.6
omega_c_abs = 0.45
gamma_abs = 0.3
"""

OSCILLATOR = """
orders = [0, 1, 2]
normalize_vectors = true

[model]
kind = "oscillator"
omega = 1.0
omega0_abs = 1.0
amplitude_abs = 0.5
gamma_abs = 0.25
truncation = 12
"""


def run(out_root: Path) -> int:
    for name, text in (("two_level", TWO_LEVEL), ("oscillator", OSCILLATOR)):
        with tempfile.NamedTemporaryFile("w", suffix=".toml", delete=False) as fh:
            fh.write(text)
            cfg = fh.name
        print(f"== {name} ==")
        code = main(["benchmark", "--config", cfg, "--out",
                     str(out_root / name), "--omega-sweep", "16:256:5"])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "results" / "convergence"
    sys.exit(run(out_root))
