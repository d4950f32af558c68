"""Partial overlap and assigned fraction of the threshold estimator versus T."""
from _common import parser

from subtree_align.harness import ExperimentConfig, run_experiment

if __name__ == "__main__":
    p = parser(__doc__, samples=20)
    p.add_argument("-d", type=int, default=8)
    args = p.parse_args()
    Ts = [round(0.05 * k, 2) for k in range(20)] + [0.97, 0.99, 0.999]
    cfg = ExperimentConfig(n=[512], lam=[1.4], s=[0.83], d_min=args.d, d_max=args.d,
                           samples=args.samples, seed=args.seed, thresholds=Ts,
                           diagnostics=False, thresholds_out=args.out)
    for r in run_experiment(cfg).threshold_rows:
        print(f"T={r['T']:.3f} fT={r['fT']:.4f} partial overlap={r['partial_overlap_mean']:.4f}"
              f" +- {r['partial_overlap_se']:.4f}")
