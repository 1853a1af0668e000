#!/usr/bin/env python3
"""Print every scheme's schedule for a few rank counts; optionally dump the
reduction tree and per-rank bracketing for one of them.

    python scripts/schedule_gallery.py 22 --show-tree --dot tree22.dot
"""

import argparse

from ccsim.schedule import (
    GENERATORS,
    build_tree,
    reduction_order,
    run_lengths,
    tree_to_dot,
)
from ccsim.terms import render


def describe(p):
    print(f"p = {p}")
    for scheme in sorted(GENERATORS):
        sched = GENERATORS[scheme](p)
        print(f"  {scheme:>9}: rounds={sched.rounds:<4} "
              f"skips={list(sched.skips)} runs={run_lengths(sched)}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("p", nargs="*", type=int, default=[8, 22, 100])
    parser.add_argument("--show-tree", action="store_true",
                        help="print the halving-scheme bracketing per rank")
    parser.add_argument("--dot", metavar="FILE",
                        help="write the halving reduction tree of the last p")
    args = parser.parse_args()

    for p in args.p:
        describe(p)
    last = args.p[-1]
    tree = build_tree(GENERATORS["halving"](last))
    if args.show_tree:
        for r in range(last):
            print(f"rank {r:>3}: {render(reduction_order(tree, r))}")
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(tree_to_dot(tree))
        print(f"wrote {args.dot}")


if __name__ == "__main__":
    main()
