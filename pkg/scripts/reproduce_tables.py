#!/usr/bin/env python3
"""Reproduce the MSE/bias tables at T=1,000 for both two-arm instances.

For each instance, runs KL-MS (exact probabilities) and Thompson
sampling across a Monte-Carlo sample grid, then prints the ope.csv
contents.  The default grid is M=1000 only; pass --full-grid for
M in {1e3, 1e4, 1e5} (hours of Beta sampling on a small machine).
"""

import argparse
import os
import sys
import tempfile
from pathlib import Path

from klms.cli import main as klms_main

CONFIG_TEMPLATE = """\
[instance]
arms = [
  {{ kind = "bernoulli", mean = {mu0} }},
  {{ kind = "bernoulli", mean = {mu1} }},
]

[run]
horizon = 1000
n_trials = 2000
base_seed = 20230818

[[policies]]
kind = "klms"

[[policies]]
kind = "bernoulli_ts"

[ope]
enabled = true
target = "uniform"
mc_samples = [{grid}]
"""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out-root", default="results/tables")
    parser.add_argument("--full-grid", action="store_true")
    args = parser.parse_args()

    grid = "1000, 10000, 100000" if args.full_grid else "1000"
    for label, mu0, mu1 in (("low", 0.20, 0.25), ("high", 0.80, 0.90)):
        cfg_text = CONFIG_TEMPLATE.format(mu0=mu0, mu1=mu1, grid=grid)
        tmp = Path(tempfile.mkstemp(suffix=".cfg")[1])
        tmp.write_text(cfg_text)
        out = Path(args.out_root) / label
        code = klms_main(
            ["offline-eval", "--config", str(tmp), "--out", str(out), "--jobs", str(args.jobs)]
        )
        if code != 0:
            return code
        print(f"--- {label} instance (means {mu0}/{mu1}) ---")
        print((out / "ope.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
