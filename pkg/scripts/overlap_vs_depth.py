"""Mean overlap as a function of depth d = 1..20 (lambda=1.4, s=0.81)."""
from _common import parser

from subtree_align.harness import ExperimentConfig, run_experiment, select_optimal_depth

if __name__ == "__main__":
    p = parser(__doc__, samples=50)
    p.add_argument("-n", type=int, nargs="+", default=[128, 256, 512])
    args = p.parse_args()
    cfg = ExperimentConfig(n=args.n, lam=[1.4], s=[0.81], d_max=20, samples=args.samples,
                           seed=args.seed, diagnostics=False, out=args.out)
    res = run_experiment(cfg, progress=print)
    for r in res.rows:
        print(f"n={r['n']:5d} d={r['d']:2d} overlap={r['overlap_mean']:.4f} +- {r['overlap_se']:.4f}")
    for key, best in select_optimal_depth(res.rows).items():
        print(f"n={key[0]}: d*={best.d_star} overlap={best.overlap:.4f}")
