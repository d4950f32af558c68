"""Experiment sweeps: grid configs, per-depth evaluation, CSV output,
optimal-depth selection and crossover extraction."""
import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._random import derived_seed
from .aligner import iterate_scores
from .ensembles import (
    DegreeTripleLaw,
    ErParams,
    WeightModel,
    attach_weights,
    sample_configuration_correlated,
    sample_correlated_er,
)
from .errors import CapacityError, ConfigError, IncompleteGridError, ParameterError
from .estimators import argmax_estimator, row_normalize, threshold_estimator
from .kernel import DEFAULT_DEGREE_CAP
from .metrics import hamming_loss, nishimori_check, overlap, overlap_details, score_diagnostics

CSV_HEADER = ["n", "lambda", "s", "d", "samples", "overlap_mean", "overlap_se",
              "loss_mean", "ov_hat_mean", "A1", "A2", "A3", "A4", "fT", "status"]
THRESHOLD_HEADER = ["n", "lambda", "s", "d", "T", "samples", "partial_overlap_mean",
                    "partial_overlap_se", "fT", "loss_mean"]


@dataclass
class ExperimentConfig:
    """Parameter sweep description.

    ``ensemble`` is ``"er"``, ``"config"`` (configuration model with a
    Poisson-product law unless ``q_table`` is given) or ``"weighted"``
    (ER topology with weights drawn from ``weight_model``).
    ``threshold`` selects the partial estimator behind ``loss_mean`` and
    ``fT``; ``thresholds`` (optional) adds a threshold sweep output.
    """

    n: list
    lam: list
    s: list
    d_max: int = 20
    d_min: int = 1
    samples: int = 10
    seed: int = 0
    ensemble: str = "er"
    q_table: Optional[list] = None
    weight_model: Optional[dict] = None
    threshold: float = 0.5
    thresholds: Optional[list] = None
    diagnostics: bool = True
    degree_cap: int = DEFAULT_DEGREE_CAP
    threads: Optional[int] = None
    crossover_R: float = 0.1
    out: Optional[str] = None
    thresholds_out: Optional[str] = None

    def __post_init__(self):
        for name in ("n", "lam", "s"):
            val = getattr(self, name)
            if not isinstance(val, (list, tuple)):
                val = [val]
            if len(val) == 0:
                raise ConfigError(f"grid {name!r} is empty")
            setattr(self, name, list(val))
        if self.d_max < 1 or not 1 <= self.d_min <= self.d_max:
            raise ConfigError("need 1 <= d_min <= d_max")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.ensemble not in ("er", "config", "weighted"):
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        if self.ensemble == "weighted" and not self.weight_model:
            raise ConfigError("weighted ensemble needs a weight_model")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_json(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return json.dumps(d, indent=2)


def _weight_model(spec):
    if isinstance(spec, WeightModel):
        return spec
    try:
        return WeightModel(spec.get("kind", "product"), float(spec.get("rho", 0.0)))
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def _q_from_table(rows):
    try:
        return DegreeTripleLaw({(int(a), int(b), int(c)): float(p) for a, b, c, p in rows})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad q_table: {exc}") from None


def sample_seed(seed, n, lam, s, sample):
    """Seed of one sample; independent of where the point sits in the grid."""
    return derived_seed(seed, int(n), int(round(lam * 1e6)), int(round(s * 1e6)), int(sample))


def _draw_instance(cfg, n, lam, s, ss):
    rng = np.random.default_rng(ss)
    if cfg.ensemble == "config":
        q = (_q_from_table(cfg.q_table) if cfg.q_table is not None
             else DegreeTripleLaw.poisson_product(lam, s))
        _, inst = sample_configuration_correlated(q, n, rng)
        return inst, q, None
    colored, inst = sample_correlated_er(ErParams(n, lam, s), rng)
    if cfg.ensemble == "weighted":
        model = _weight_model(cfg.weight_model)
        return attach_weights(inst, colored, model, rng), (lam, s), model
    return inst, (lam, s), None


def _mean_se(values):
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def _evaluate(score, inst, cfg, est_seed):
    est = argmax_estimator(score, est_seed)
    truth = inst.ground_truth
    rec = {"overlap": overlap(est, truth)}
    p = row_normalize(score)
    _, rec["ov_hat"] = nishimori_check(p, est, truth)
    partial = threshold_estimator(p, cfg.threshold)
    rec["loss"] = hamming_loss(partial, truth)
    rec["fT"] = partial.n_assigned / partial.n
    if cfg.diagnostics:
        rec["A"] = score_diagnostics(score, est, truth, inst.graph_b)
    else:
        rec["A"] = (math.nan,) * 4
    if cfg.thresholds:
        rec["thr"] = []
        for T in cfg.thresholds:
            pe = threshold_estimator(p, T)
            det = overlap_details(pe, truth)
            rec["thr"].append((det.value, det.n_assigned / pe.n, hamming_loss(pe, truth), det.empty))
    return rec


def run_point(cfg, n, lam, s):
    """All depth rows (and threshold rows) of one grid point."""
    per_d = {d: [] for d in range(cfg.d_min, cfg.d_max + 1)}
    failures = 0
    for k in range(cfg.samples):
        ss = sample_seed(cfg.seed, n, lam, s, k)
        gen_ss, est_ss = ss.spawn(2)
        inst, base, model = _draw_instance(cfg, n, lam, s, gen_ss)
        try:
            est_seeds = est_ss.spawn(cfg.d_max)
            for score in iterate_scores(inst, base, cfg.d_max, model,
                                        cfg.degree_cap, cfg.threads):
                if score.depth >= cfg.d_min:
                    per_d[score.depth].append(
                        _evaluate(score, inst, cfg, np.random.default_rng(est_seeds[score.depth - 1])))
        except CapacityError as exc:
            failures += 1
            warnings.warn(f"sample {k} at (n={n}, lambda={lam}, s={s}): {exc}")
    rows, trows = [], []
    for d, recs in per_d.items():
        if failures == cfg.samples:
            status = "failed"
        elif failures:
            status = f"partial:{failures}_failed"
        else:
            status = "ok"
        ov_m, ov_se = _mean_se([r["overlap"] for r in recs])
        a = np.array([r["A"] for r in recs]) if recs else np.full((1, 4), math.nan)
        rows.append({
            "n": n, "lambda": lam, "s": s, "d": d, "samples": len(recs),
            "overlap_mean": ov_m, "overlap_se": ov_se,
            "loss_mean": _mean_se([r["loss"] for r in recs])[0],
            "ov_hat_mean": _mean_se([r["ov_hat"] for r in recs])[0],
            "A1": float(np.mean(a[:, 0])), "A2": float(np.mean(a[:, 1])),
            "A3": float(np.nanmean(a[:, 2])) if np.any(np.isfinite(a[:, 2])) else math.nan,
            "A4": float(np.mean(a[:, 3])),
            "fT": _mean_se([r["fT"] for r in recs])[0],
            "status": status,
        })
        if cfg.thresholds and recs:
            for j, T in enumerate(cfg.thresholds):
                vals = [r["thr"][j] for r in recs]
                po = [v[0] for v in vals if not v[3]]
                m, se = _mean_se(po)
                trows.append({
                    "n": n, "lambda": lam, "s": s, "d": d, "T": T, "samples": len(po),
                    "partial_overlap_mean": m, "partial_overlap_se": se,
                    "fT": float(np.mean([v[1] for v in vals])),
                    "loss_mean": float(np.mean([v[2] for v in vals])),
                })
    return rows, trows, per_d


@dataclass
class SweepResult:
    rows: list
    threshold_rows: list = field(default_factory=list)


def run_experiment(cfg, progress=None):
    """Run the full grid and write the CSVs named in the config."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    rows, trows = [], []
    for n in cfg.n:
        for lam in cfg.lam:
            for s in cfg.s:
                try:
                    ErParams(int(n), float(lam), float(s))
                except ParameterError as exc:
                    raise ConfigError(str(exc)) from None
                r, t, _ = run_point(cfg, int(n), float(lam), float(s))
                rows.extend(r)
                trows.extend(t)
                if progress:
                    progress(n, lam, s, r)
    if cfg.out:
        write_csv(rows, cfg.out)
    if cfg.thresholds and cfg.thresholds_out:
        write_csv(trows, cfg.thresholds_out, THRESHOLD_HEADER)
    return SweepResult(rows, trows)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, target, header=CSV_HEADER):
    """Write rows to a path or an open text stream; floats keep full precision."""
    if hasattr(target, "write"):
        w = csv.writer(target, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[h]) for h in header])
        return
    with open(target, "w", newline="") as fh:
        write_csv(rows, fh, header)


def read_csv(path):
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rec = {}
            for k, v in r.items():
                if k == "status":
                    rec[k] = v
                elif k in ("n", "d", "samples"):
                    rec[k] = int(v)
                else:
                    rec[k] = float(v)
            out.append(rec)
    return out


@dataclass(frozen=True)
class OptimalDepth:
    n: int
    lam: float
    s: float
    d_star: int
    overlap: float
    overlap_se: float
    truncated: bool


def select_optimal_depth(rows):
    """d* per (n, lambda, s): argmax of mean overlap, ties to the smaller d."""
    groups = {}
    for r in rows:
        groups.setdefault((r["n"], r["lambda"], r["s"]), []).append(r)
    out = {}
    for key, rs in groups.items():
        ds = sorted(r["d"] for r in rs)
        if ds != list(range(ds[0], ds[0] + len(ds))) or ds[0] != 1:
            raise IncompleteGridError(f"point {key}: depths {ds} do not cover 1..{ds[-1]}")
        best = None
        for r in sorted(rs, key=lambda r: r["d"]):
            ov = r["overlap_mean"]
            if best is None or ov > best["overlap_mean"]:
                best = r
        truncated = best["d"] == ds[-1] and len(ds) > 1
        if truncated:
            warnings.warn(f"point {key}: overlap still increasing at d_max={ds[-1]}")
        out[key] = OptimalDepth(key[0], key[1], key[2], best["d"], best["overlap_mean"],
                                best["overlap_se"], truncated)
    return out


def crossover_line(rows, R):
    """Per (n, lambda): smallest grid s whose optimal-depth overlap exceeds R
    (None when no grid value does)."""
    if isinstance(rows, dict):
        best = rows
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            best = select_optimal_depth(rows)
    lines = {}
    for (n, lam, s), od in sorted(best.items()):
        lines.setdefault((n, lam), []).append((s, od.overlap))
    out = {}
    for key, pts in lines.items():
        out[key] = next((s for s, ov in sorted(pts) if ov > R), None)
    return out
