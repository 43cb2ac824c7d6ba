#!/usr/bin/env python3
"""Covering/packing complexity of the built-in metric families next to the dim of their HSTs."""
import argparse
import math

from movebandit.hst import build_hst, tree_complexity, verify_dominance
from movebandit.metric import complexity_report, make_metric


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("specs", nargs="*", default=["uniform:8", "uniform:32", "grid1d:9", "grid1d:33",
                                                 "gridLinf:2,5", "random:12,1", "random:24,2"])
    args = ap.parse_args(argv)
    print(f"{'metric':>14} {'k':>4} {'C_p':>7} {'C_c':>7} {'mode':>6} {'H':>3} {'dim':>7} "
          f"{'dim/(C_c ln k)':>14} {'max 4-ratio':>11}")
    for spec in args.specs:
        m = make_metric(spec)
        rep = complexity_report(m)
        tree = build_hst(m)
        dim = tree_complexity(tree).value
        ratio = dim / (rep.cover_complexity * math.log(m.k)) if m.k > 1 else float("nan")
        print(f"{spec:>14} {m.k:>4} {rep.pack_complexity:>7.3f} {rep.cover_complexity:>7.3f} "
              f"{rep.mode:>6} {tree.depth:>3} {dim:>7.3f} {ratio:>14.3f} "
              f"{verify_dominance(m, tree).max_ratio:>11.3f}")


if __name__ == "__main__":
    main()
