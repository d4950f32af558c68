"""True overlap versus the estimator's own predicted overlap, as a function of d."""
from _common import mean_se, parser

from subtree_align.harness import ExperimentConfig, run_point

if __name__ == "__main__":
    p = parser(__doc__, samples=20)
    p.add_argument("-n", type=int, default=512)
    p.add_argument("--lam", type=float, default=2.4)
    p.add_argument("-s", type=float, default=0.8)
    p.add_argument("--d-max", type=int, default=12)
    args = p.parse_args()
    cfg = ExperimentConfig(n=[args.n], lam=[args.lam], s=[args.s], d_max=args.d_max,
                           samples=args.samples, seed=args.seed, diagnostics=False)
    _, _, per_d = run_point(cfg, args.n, args.lam, args.s)
    for d, recs in per_d.items():
        ov, ov_se = mean_se([r["overlap"] for r in recs])
        oh, oh_se = mean_se([r["ov_hat"] for r in recs])
        print(f"d={d:2d} ov={ov:.4f}+-{ov_se:.4f} ov_hat={oh:.4f}+-{oh_se:.4f}")
