#!/usr/bin/env python3
"""Reproduce both regret comparisons (Thompson sampling vs KL-MS vs MS)
at T=10,000 with 2000 trials each, plus the bound diagnostics.

Writes regret.csv/regret.svg/diagnostics.csv under results/regret_low/
and results/regret_high/.
"""

import argparse
import os
import sys
from pathlib import Path

from klms.cli import main as klms_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out-root", default=str(ROOT / "results"))
    args = parser.parse_args()

    for name in ("regret_low", "regret_high"):
        config = str(ROOT / "configs" / f"{name}.cfg")
        out = str(Path(args.out_root) / name)
        code = klms_main(["regret", "--config", config, "--out", out, "--jobs", str(args.jobs)])
        if code != 0:
            return code
        code = klms_main(["diagnose", "--config", config, "--out", out, "--jobs", str(args.jobs)])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
