"""KL_d of the tree hypothesis test for lambda=1.5, d = 1..8."""
import csv
import sys

from _common import parser

from subtree_align.metrics import estimate_kl_curve, exact_kl_depth1

if __name__ == "__main__":
    p = parser(__doc__, samples=10_000)
    p.add_argument("--lam", type=float, default=1.5)
    p.add_argument("-s", type=float, nargs="+", default=[0.6, 0.7, 0.72, 0.74, 0.76, 0.78, 0.8])
    p.add_argument("--d-max", type=int, default=8)
    args = p.parse_args()
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["lambda", "s", "d", "kl_mean", "kl_se", "samples"])
    for s in args.s:
        curve = estimate_kl_curve(args.lam, s, args.d_max, args.samples, args.seed)
        for e in curve:
            w.writerow([args.lam, s, e.depth, e.mean, e.std_error, e.sample_count])
        print(f"s={s}: exact KL_1 = {exact_kl_depth1(args.lam, s):.5f}", file=sys.stderr)
