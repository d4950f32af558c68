"""Average log-scores A1..A4 (estimator, truth, quasi-aligned, random pairs)."""
from _common import parser

from subtree_align.harness import ExperimentConfig, run_experiment

if __name__ == "__main__":
    p = parser(__doc__, samples=15)
    p.add_argument("--lam", type=float, default=2.9)
    p.add_argument("-s", type=float, default=0.79)
    p.add_argument("--d-max", type=int, default=6)
    args = p.parse_args()
    cfg = ExperimentConfig(n=[512], lam=[args.lam], s=[args.s], d_max=args.d_max,
                           samples=args.samples, seed=args.seed, out=args.out)
    for r in run_experiment(cfg).rows:
        print(f"d={r['d']:2d} A1={r['A1']:.3f} A2={r['A2']:.3f} A3={r['A3']:.3f} A4={r['A4']:.3f}")
