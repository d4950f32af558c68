"""Overlap at fixed depth d=2 versus n, with a power-law fit."""
import numpy as np
from _common import parser

from subtree_align.harness import ExperimentConfig, run_experiment

if __name__ == "__main__":
    p = parser(__doc__, samples=100)
    p.add_argument("-s", type=float, nargs="+", default=[0.5, 0.61, 0.65])
    p.add_argument("-n", type=int, nargs="+", default=[250, 500, 1000, 2000])
    args = p.parse_args()
    cfg = ExperimentConfig(n=args.n, lam=[1.4], s=args.s, d_min=2, d_max=2,
                           samples=args.samples, seed=args.seed, diagnostics=False, out=args.out)
    rows = run_experiment(cfg).rows
    for s in args.s:
        sub = sorted((r for r in rows if r["s"] == s), key=lambda r: r["n"])
        ns = np.array([r["n"] for r in sub])
        ov = np.array([r["overlap_mean"] for r in sub])
        for n, o in zip(ns, ov):
            print(f"s={s} n={n:5d} overlap={o:.3e}")
        if np.all(ov > 0):
            print(f"s={s}: fitted exponent alpha = {np.polyfit(np.log(ns), np.log(ov), 1)[0]:.3f}")
