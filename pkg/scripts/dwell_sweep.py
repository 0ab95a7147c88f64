#!/usr/bin/env python3
"""Map how the achievable margin degrades as the dwell range widens.

Keeps t_min from the config and sweeps t_max over a geometric range, running
the full co-design at each point.  The printed table shows where the design
stops being feasible, which is the practical robustness question for
aperiodic sampling.

Usage: python3 scripts/dwell_sweep.py CONFIG [--steps N] [--max-factor F] [--nodes M]
"""

import argparse

from minjump import DwellRange
from minjump.cli import build_dwell, build_model, build_weights, load_config
from minjump.synth import SynthesisOptions, synthesize


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--steps", type=int, default=6)
    parser.add_argument("--max-factor", type=float, default=4.0,
                        help="largest t_max as a multiple of the config value")
    parser.add_argument("--nodes", type=int, default=6)
    args = parser.parse_args()

    cfg = load_config(args.config)
    model = build_model(cfg)
    weights = build_weights(cfg)
    base = build_dwell(cfg)
    opts = SynthesisOptions(clock_nodes=args.nodes)

    print(f"{'t_max':>10} {'status':>16} {'margin':>12} {'post-check':>12}")
    for k in range(args.steps):
        factor = args.max_factor ** (k / max(1, args.steps - 1))
        t_max = base.t_max * factor
        result = synthesize(model, weights, DwellRange(base.t_min, t_max), opts)
        post = (f"{result.report.worst_margin:12.4e}"
                if result.report is not None else " " * 12)
        print(f"{t_max:10.4f} {result.status:>16} {result.eps:12.4e} {post}")


if __name__ == "__main__":
    main()
