#!/usr/bin/env python3
"""Sweep two-mode weight matrices for a job config and rank them by margin.

Candidates are column-stochastic matrices [[a, b], [1-a, 1-b]] on a uniform
grid over (a, b).  For each candidate the full co-design runs; the summary
table lists the achieved margin variable so the structure of the feasible
region is visible at a glance.

Usage: python3 scripts/pi_scan.py CONFIG [--points N] [--nodes M]
"""

import argparse

import numpy as np

from minjump import ModeWeights, scan_weights
from minjump.cli import build_dwell, build_model, load_config
from minjump.synth import SynthesisOptions


def candidate_grid(points):
    vals = np.linspace(0.05, 0.95, points)
    for a in vals:
        for b in vals:
            yield ModeWeights([[a, b], [1.0 - a, 1.0 - b]])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--points", type=int, default=5, help="grid points per axis")
    parser.add_argument("--nodes", type=int, default=6)
    args = parser.parse_args()

    cfg = load_config(args.config)
    model = build_model(cfg)
    if model.modes != 2:
        raise SystemExit("this sweep only handles two-mode systems")
    dwell = build_dwell(cfg)
    opts = SynthesisOptions(clock_nodes=args.nodes)

    best, best_pi, summary = scan_weights(
        model, list(candidate_grid(args.points)), dwell, opts)

    print(f"{'pi[0,0]':>8} {'pi[0,1]':>8} {'status':>16} {'margin':>12}")
    for pi, status, eps in summary:
        print(f"{pi.pi[0, 0]:8.3f} {pi.pi[0, 1]:8.3f} {status:>16} {eps:12.4e}")
    if best is not None and best.success:
        print(f"\nbest: pi[0,0] = {best_pi.pi[0, 0]:.3f}, "
              f"pi[0,1] = {best_pi.pi[0, 1]:.3f}, margin {best.eps:.4e}")
    else:
        print("\nno candidate was feasible")


if __name__ == "__main__":
    main()
