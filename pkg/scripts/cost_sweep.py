#!/usr/bin/env python3
"""Sweep schedule schemes across rank counts and compare costs.

Runs the simulator at each grid point, charges the trace under the
linear-affine model, and prints one table per element count.  Useful for
eyeballing where the sqrt / linear schemes stop being competitive as the
latency term alpha grows.

    python scripts/cost_sweep.py --p 4,8,22,64,256 --m 1024 --alpha 10
"""

import argparse
from fractions import Fraction

import numpy as np

from ccsim import BlockLayout, BlockVector, CostParams, execute, INT64_SUM
from ccsim.costmodel import measured_cost
from ccsim.schedule import GENERATORS


def sweep(p_values, m_values, params):
    for m in m_values:
        print(f"\n# m = {m} elements, alpha={params.alpha} beta={params.beta} "
              f"gamma={params.gamma}")
        header = ["p"] + [f"{s}(rounds)" for s in sorted(GENERATORS)]
        print("  ".join(f"{h:>16}" for h in header))
        for p in p_values:
            cells = [f"{p:>16}"]
            for scheme in sorted(GENERATORS):
                sched = GENERATORS[scheme](p)
                layout = BlockLayout.spread(p, m)
                vectors = [BlockVector(layout, np.zeros(layout.total, dtype=np.int64))
                           for _ in range(p)]
                result = execute("reduce_scatter", vectors, schedule=sched,
                                 op=INT64_SUM)
                cost = measured_cost(result.metrics, params)
                cells.append(f"{float(cost):>10.1f} ({sched.rounds:>3})")
            print("  ".join(cells))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--p", default="4,8,16,22,64,128,256")
    parser.add_argument("--m", default="256,4096")
    parser.add_argument("--alpha", default="1")
    parser.add_argument("--beta", default="1")
    parser.add_argument("--gamma", default="1")
    args = parser.parse_args()
    params = CostParams(alpha=Fraction(args.alpha), beta=Fraction(args.beta),
                        gamma=Fraction(args.gamma))
    sweep([int(x) for x in args.p.split(",")],
          [int(x) for x in args.m.split(",")], params)


if __name__ == "__main__":
    main()
