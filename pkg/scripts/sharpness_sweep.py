"""Sweep G_t over (t, delta) and compare hazard[t] with the plain half-line.

Prints one CSV row per configuration. The expander-size column lets the
ratio be read against the size rule; ``--size-scale`` rescales that rule to
probe how sensitive the separation is to it.

    python scripts/sharpness_sweep.py --t 500 1000 2000 --delta 0.05 0.1 0.25
"""

from __future__ import annotations

import argparse
import math
import sys

from returnlab.exactwalk import return_time_distribution
from returnlab.expander import random_regular
from returnlab.graphcore import attach_expander, build_Gt, build_halfline


def scaled_Gt(t: int, delta: float, d: int, seed: int, scale: float):
    if scale == 1.0:
        return build_Gt(t, delta, d, seed)
    n = max(d + 1, math.ceil(scale * build_Gt(t, delta, d, seed).meta["expander_size"]))
    n += (n * d) % 2
    return attach_expander(build_halfline(t), 0, random_regular(n, d, seed), 0)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--delta", type=float, nargs="+", default=[0.05, 0.1, 0.25, 0.5])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--size-scale", type=float, nargs="+", default=[1.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = sys.stdout
    out.write("t,delta,size_scale,expander_size,hazard,halfline_hazard,ratio,max_ratio,argmax_s\n")
    for t in args.t:
        line = return_time_distribution(build_halfline(t), 0, t).hazard
        for delta in args.delta:
            for scale in args.size_scale:
                g = scaled_Gt(t, delta, args.d, args.seed, scale)
                hz = return_time_distribution(g, 0, t).hazard
                ratios = [(hz[s] / line[s], s) for s in range(2, t + 1, 2) if line[s] > 0]
                best, at = max(ratios)
                n = g.n_vertices - (t + 1)
                out.write(f"{t},{delta},{scale},{n},{hz[t]:.6e},{line[t]:.6e},"
                          f"{hz[t] / line[t]:.4f},{best:.4f},{at}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
