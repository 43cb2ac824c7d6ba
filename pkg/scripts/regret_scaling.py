#!/usr/bin/env python3
"""SMB vs Exp3 on uniform(k) against the epoch adversary: movement regret and movement cost per T.

    python scripts/regret_scaling.py --exp-min 10 --exp-max 15 --seeds 3 --out scaling.csv
"""
import argparse
import csv
import sys

import numpy as np

from movebandit.harness import fit_loglog_slope, make_loss_oracle, movement_regret, run, run_general
from movebandit.metric import uniform_metric
from movebandit.smb import Exp3, exp3_default_eta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--exp-min", type=int, default=10)
    ap.add_argument("--exp-max", type=int, default=15)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--adversary", default="epochAdversary")
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)

    m = uniform_metric(args.k)
    rows = []
    for e in range(args.exp_min, args.exp_max + 1):
        T = 2 ** e
        for seed in range(args.seeds):
            oracle = make_loss_oracle(args.adversary, seed, m, T)
            smb, rep = run_general(m, oracle, T, seed)
            exp3 = run(Exp3(m.k, exp3_default_eta(m.k, T)), oracle, m, T, seed)
            for name, tr in (("smb", smb), ("exp3", exp3)):
                rows.append({"T": T, "seed": seed, "algorithm": name,
                             "movement_regret": movement_regret(tr, oracle, m),
                             "total_move": tr.total_move, "H": rep.depth if name == "smb" else ""})
            print(f"T=2^{e} seed={seed} done", file=sys.stderr)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        fh.close()

    for name in ("smb", "exp3"):
        sel = [r for r in rows if r["algorithm"] == name]
        slope = fit_loglog_slope([r["T"] for r in sel], [r["movement_regret"] for r in sel])
        last = np.mean([r["total_move"] for r in sel if r["T"] == 2 ** args.exp_max])
        print(f"{name}: regret slope {slope:.3f}, mean movement at T=2^{args.exp_max}: {last:.1f}",
              file=sys.stderr)


if __name__ == "__main__":
    main()
