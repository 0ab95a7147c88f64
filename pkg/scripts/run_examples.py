#!/usr/bin/env python3
"""Run every bundled example end to end and drop trajectory CSVs.

Usage: python3 scripts/run_examples.py [output_dir]
"""

import sys
from pathlib import Path

from minjump.cli import main as cli_main


def main(argv):
    out_dir = Path(argv[1]) if len(argv) > 1 else Path("example_runs")
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for ident in (1, 2, 3):
        csv_path = out_dir / f"example{ident}_trajectory.csv"
        code = cli_main(["example", str(ident), "--out", str(csv_path)])
        worst = max(worst, code)
        print(f"example {ident} -> exit {code}, {csv_path}")
    return worst


if __name__ == "__main__":
    sys.exit(main(sys.argv))
