#!/usr/bin/env python3
"""Reproduce the offline-evaluation experiment: KL-MS vs Thompson
sampling logs on the 0.8/0.9 instance, T=10,000, 2000 trials.

Writes ope.csv and ope_hist.svg under results/figure1/.  The Thompson
Monte-Carlo estimation dominates the runtime (minutes; scale with
--jobs).  Pass --fast for a 100-trial smoke run.
"""

import argparse
import os
import sys
from pathlib import Path

from klms.cli import main as klms_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(ROOT / "results" / "figure1"))
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--fast", action="store_true", help="100 trials instead of 2000")
    args = parser.parse_args()

    config = ROOT / "configs" / "figure1.cfg"
    if args.fast:
        import tempfile

        text = config.read_text().replace("n_trials = 2000", "n_trials = 100")
        tmp = Path(tempfile.mkstemp(suffix=".cfg")[1])
        tmp.write_text(text)
        config = tmp
    return klms_main(
        ["offline-eval", "--config", str(config), "--out", args.out, "--jobs", str(args.jobs)]
    )


if __name__ == "__main__":
    sys.exit(main())
