"""KS distance of standardised sample means to N(0, 1) as n grows; writes per-repeat CSV.

    python3 scripts/clt_convergence.py --distribution poisson --out clt.csv
"""

import argparse
import csv

from deltaif.resample import clt_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distribution", default="poisson", choices=("poisson", "uniform", "bernoulli"))
    ap.add_argument("--param", type=float)
    ap.add_argument("--n-values", default="10,100,1000,10000")
    ap.add_argument("--replicates", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="CSV of (n, repeat, ks) for external plotting")
    args = ap.parse_args()

    n_values = [int(v) for v in args.n_values.split(",")]
    rep = clt_experiment(args.distribution, n_values, args.replicates, args.seed, args.param, args.repeats)
    print(f"{args.distribution}: {args.replicates} means per KS distance, {args.repeats} repeats")
    for n, m, s in zip(rep.n_values, rep.mean_ks, rep.ks.std(axis=1, ddof=1)):
        print(f"  n = {n:>6}   mean KS {m:.4f}   sd {s:.4f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "repeat", "ks"])
            w.writerows(rep.rows())
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
