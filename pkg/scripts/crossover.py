"""Optimal-depth overlap versus s and the R-crossover line."""
import warnings

from _common import parser

from subtree_align.harness import ExperimentConfig, crossover_line, run_experiment, select_optimal_depth

if __name__ == "__main__":
    p = parser(__doc__, samples=50)
    p.add_argument("-n", type=int, default=512)
    p.add_argument("--lam", type=float, nargs="+", default=[1.4])
    p.add_argument("-R", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    args = p.parse_args()
    grid = [round(0.4 + 0.05 * k, 2) for k in range(11)]
    cfg = ExperimentConfig(n=[args.n], lam=args.lam, s=grid, d_max=20, samples=args.samples,
                           seed=args.seed, diagnostics=False, out=args.out)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        best = select_optimal_depth(run_experiment(cfg, progress=print).rows)
    for (n, lam, s), b in sorted(best.items()):
        print(f"lambda={lam} s={s:.2f} d*={b.d_star:2d} overlap={b.overlap:.4f}")
    for R in args.R:
        print(f"R={R}: crossover", crossover_line(best, R))
