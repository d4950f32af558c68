"""Command-line entry point.

Exit codes: 0 ok, 2 config/parameter error, 3 capacity error, 4 data error.
"""
import argparse
import csv
import json
import sys

import numpy as np

from .aligner import iterate_scores
from .ensembles import (
    DegreeTripleLaw,
    ErParams,
    WeightModel,
    attach_weights,
    load_pair,
    sample_configuration_correlated,
    sample_correlated_er,
    save_pair,
)
from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    DegenerateLawError,
    DegenerateRowError,
    GenerationError,
    IncompleteGridError,
    ParameterError,
)
from .estimators import argmax_estimator, row_normalize, threshold_estimator
from .harness import (
    ExperimentConfig,
    crossover_line,
    run_experiment,
    select_optimal_depth,
    write_csv,
)
from .kernel import DEFAULT_DEGREE_CAP
from .metrics import estimate_kl_curve, it_upper_bound, overlap

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_DATA = 0, 2, 3, 4


def _common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--degree-cap", type=int, default=DEFAULT_DEGREE_CAP)
    p.add_argument("--out", default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="subtree-align")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a correlated pair and write a pair file")
    _common(g)
    g.add_argument("--ensemble", choices=("er", "config", "weighted"), default="er")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    g.add_argument("-s", type=float, required=True)
    g.add_argument("--weight-kind", default="gaussian_correlated",
                   choices=("product", "gaussian_correlated", "equal_weight"))
    g.add_argument("--rho", type=float, default=0.5)

    a = sub.add_parser("align", help="score a pair file and write the assignment")
    _common(a)
    a.add_argument("pair_file")
    a.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    a.add_argument("-s", type=float, required=True)
    a.add_argument("--d-max", type=int, default=8)
    a.add_argument("--law", choices=("er", "config"), default="er",
                   help="ER messages or configuration-model messages with the Poisson law")
    a.add_argument("--weight-kind", default=None,
                   choices=("product", "gaussian_correlated", "equal_weight"))
    a.add_argument("--rho", type=float, default=0.0)
    a.add_argument("--threshold", type=float, default=None,
                   help="use the threshold estimator instead of the row argmax")
    a.add_argument("--scores", default=None, help="also save the log-score matrix (.npy)")

    w = sub.add_parser("sweep", help="run an experiment config and write the CSV")
    _common(w)
    w.add_argument("config")
    w.add_argument("--d-max", type=int, default=None)
    w.add_argument("--samples", type=int, default=None)
    w.add_argument("--thresholds-out", default=None)

    k = sub.add_parser("tree-kl", help="Monte-Carlo KL_d of the tree problem")
    _common(k)
    k.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    k.add_argument("-s", type=float, nargs="+", required=True)
    k.add_argument("--d-max", type=int, default=8)
    k.add_argument("--samples", type=int, default=1000)

    b = sub.add_parser("bound", help="information-theoretic overlap bound c(lambda s)")
    _common(b)
    b.add_argument("lambda_s", type=float, nargs="+")
    return parser


def _cmd_generate(args):
    if not args.out:
        raise ConfigError("generate needs --out")
    rng = np.random.default_rng(args.seed)
    if args.ensemble == "config":
        q = DegreeTripleLaw.poisson_product(args.lam, args.s)
        _, inst = sample_configuration_correlated(q, args.n, rng)
    else:
        colored, inst = sample_correlated_er(ErParams(args.n, args.lam, args.s), rng)
        if args.ensemble == "weighted":
            inst = attach_weights(inst, colored, WeightModel(args.weight_kind, args.rho), rng)
    save_pair(inst, args.out)
    print(f"wrote {args.out}: n={inst.n} m_a={inst.graph_a.m} m_b={inst.graph_b.m}")


def _cmd_align(args):
    inst = load_pair(args.pair_file)
    model = None
    if args.weight_kind:
        if not inst.weighted:
            raise DataError("weight model given but the pair file has no weights")
        model = WeightModel(args.weight_kind, args.rho)
    base = (DegreeTripleLaw.poisson_product(args.lam, args.s) if args.law == "config"
            else (args.lam, args.s))
    score = None
    for score in iterate_scores(inst, base, args.d_max, model, args.degree_cap, args.threads):
        pass
    if args.threshold is None:
        est = argmax_estimator(score, args.seed)
    else:
        est = threshold_estimator(row_normalize(score), args.threshold)
    if args.scores:
        np.save(args.scores, score.log_scores)
    if args.out:
        est.save(args.out)
    else:
        sys.stdout.write(est.to_text())
    if inst.ground_truth is not None:
        print(f"overlap={overlap(est, inst.ground_truth)!r} assigned={est.n_assigned}",
              file=sys.stderr)


def _cmd_sweep(args):
    cfg = ExperimentConfig.from_json(args.config)
    if args.d_max is not None:
        cfg.d_max = args.d_max
    if args.samples is not None:
        cfg.samples = args.samples
    if args.out is not None:
        cfg.out = args.out
    if args.thresholds_out is not None:
        cfg.thresholds_out = args.thresholds_out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.seed is not None:
        cfg.seed = args.seed
    if args.degree_cap != DEFAULT_DEGREE_CAP:
        cfg.degree_cap = args.degree_cap
    cfg.__post_init__()

    def progress(n, lam, s, rows):
        best = max(rows, key=lambda r: r["overlap_mean"])
        print(f"n={n} lambda={lam} s={s}: best overlap {best['overlap_mean']:.4f} "
              f"at d={best['d']}", file=sys.stderr)

    result = run_experiment(cfg, progress)
    if not cfg.out:
        write_csv(result.rows, sys.stdout)
    if cfg.d_min == 1:
        try:
            lines = crossover_line(select_optimal_depth(result.rows), cfg.crossover_R)
        except IncompleteGridError:
            lines = {}
        for (n, lam), s in lines.items():
            print(f"crossover(R={cfg.crossover_R}) n={n} lambda={lam}: "
                  f"{'none' if s is None else s}", file=sys.stderr)


def _cmd_tree_kl(args):
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["lambda", "s", "d", "samples", "kl_mean", "kl_se"])
        for s in args.s:
            for est in estimate_kl_curve(args.lam, s, args.d_max, args.samples,
                                         args.seed, args.degree_cap):
                w.writerow([repr(args.lam), repr(s), est.depth, est.sample_count,
                            repr(est.mean), repr(est.std_error)])
    finally:
        if args.out:
            out.close()


def _cmd_bound(args):
    rows = [{"lambda_s": x, "c": it_upper_bound(x)} for x in args.lambda_s]
    text = "\n".join(f"{r['lambda_s']!r} {r['c']!r}" for r in rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh)
    sys.stdout.write(text)


COMMANDS = {
    "generate": _cmd_generate,
    "align": _cmd_align,
    "sweep": _cmd_sweep,
    "tree-kl": _cmd_tree_kl,
    "bound": _cmd_bound,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.seed is None and args.command != "sweep":
        args.seed = 0
    try:
        COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DataError, DegenerateRowError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ParameterError, DegenerateLawError, GenerationError,
            IncompleteGridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
