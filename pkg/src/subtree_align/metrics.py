"""Overlaps, losses, score diagnostics, the Nishimori check, the
information-theoretic bound and Monte-Carlo KL estimates for the tree problem."""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from ._random import as_generator
from .errors import CapacityError, DataError, ParameterError
from .estimators import PartialMap, RowProbabilities
from .trees import ErTreeLaw, likelihood_ratio, project_pair, sample_colored_gw


def _check_truth(est, truth):
    truth = np.asarray(truth, dtype=np.int64)
    if truth.shape != (est.n,):
        raise DataError(f"estimator has {est.n} entries, truth has {truth.size}")
    return truth


@dataclass(frozen=True)
class OverlapResult:
    value: float
    n_assigned: int
    empty: bool


def overlap_details(est: PartialMap, truth) -> OverlapResult:
    truth = _check_truth(est, truth)
    mask = est.assigned
    k = int(mask.sum())
    if k == 0:
        return OverlapResult(0.0, 0, True)
    hits = int(np.sum(est.assignment[mask] == truth[mask]))
    return OverlapResult(hits / k, k, False)


def overlap(est: PartialMap, truth) -> float:
    """Fraction of correct matches among assigned vertices (all of them for
    a full estimator); 0 for the null estimator."""
    return overlap_details(est, truth).value


def hamming_loss(est: PartialMap, truth) -> float:
    res = overlap_details(est, truth)
    frac = res.n_assigned / est.n
    return (1.0 - frac) + 2.0 * frac * (1.0 - res.value)


def score_diagnostics(scores, est: PartialMap, truth, graph_b):
    """(A1, A2, A3, A4): mean log-score at the estimate, at the truth, over
    B-neighbors of the true image, and over all pairs.

    Vertices whose true image is isolated in B do not enter A3.
    """
    arr = np.asarray(getattr(scores, "log_scores", scores), dtype=np.float64)
    truth = _check_truth(est, truth)
    if np.any(~est.assigned):
        raise DataError("diagnostics need a full estimator")
    rows = np.arange(est.n)
    a1 = float(np.mean(arr[rows, est.assignment]))
    a2 = float(np.mean(arr[rows, truth]))
    per_vertex = []
    for i in range(est.n):
        nb = graph_b.neighbors(int(truth[i]))
        if nb.size:
            per_vertex.append(float(np.mean(arr[i, nb])))
    a3 = float(np.mean(per_vertex)) if per_vertex else math.nan
    a4 = float(np.mean(arr))
    return a1, a2, a3, a4


def nishimori_check(p: RowProbabilities, est: PartialMap, truth):
    """(ov, ov_hat): realized overlap of ``est`` and the mean row maximum of P."""
    probs = p.p if isinstance(p, RowProbabilities) else np.asarray(p)
    ov = overlap(est, truth)
    ov_hat = float(np.mean(probs.max(axis=1)))
    return ov, ov_hat


@dataclass
class EvalReport:
    overlap: float
    partial_overlap: float = math.nan
    assigned_fraction: float = 1.0
    hamming_loss: float = math.nan
    score_averages: tuple = (math.nan,) * 4
    estimated_overlap: float = math.nan
    true_overlap: float = math.nan


def it_upper_bound(lambda_s, tol=1e-12, max_iter=1_000_000):
    """Largest non-negative root c of 1 - c = exp(-lambda_s c)."""
    if lambda_s < 0:
        raise ParameterError("lambda_s must be non-negative")
    if lambda_s <= 1.0:
        return 0.0
    c = 1.0
    for _ in range(max_iter):
        nxt = 1.0 - math.exp(-lambda_s * c)
        if abs(nxt - c) < tol:
            return nxt
        c = nxt
    # very close to lambda_s = 1 the iteration contracts too slowly
    return brentq(lambda x: 1.0 - x - math.exp(-lambda_s * x), c * 0.5, 1.0, xtol=tol)


# ---------------------------------------------------------------------------
# tree-problem KL


@dataclass
class KlEstimate:
    depth: int
    mean: float
    std_error: float
    sample_count: int
    values: np.ndarray = field(default=None, repr=False)


KL_MEMORY_GUARD = 1e8


def estimate_kl_curve(lam, s, d_max, samples, seed=None, degree_cap=25):
    """KL_d for d = 1..d_max from the same correlated pairs.

    Each sample draws a colored tree of depth ``d_max`` and evaluates the
    likelihood ratio of its projections truncated at every depth.
    """
    if samples < 1 or d_max < 1:
        raise ParameterError("need samples >= 1 and d_max >= 1")
    if lam ** (2 * d_max) > KL_MEMORY_GUARD:
        raise CapacityError(
            f"expected generation-pair count lam^(2d) = {lam ** (2 * d_max):.3g} "
            f"exceeds {KL_MEMORY_GUARD:.0e}")
    law = ErTreeLaw(lam, s)
    seeds = np.random.SeedSequence(seed).spawn(samples) if not isinstance(
        seed, np.random.Generator) else [seed] * samples
    values = np.empty((samples, d_max))
    for k in range(samples):
        rng = as_generator(seeds[k])
        t, t2 = project_pair(sample_colored_gw(law, d_max, rng))
        for d in range(1, d_max + 1):
            values[k, d - 1] = likelihood_ratio(t, t2, lam, s, d, degree_cap)
    out = []
    for d in range(1, d_max + 1):
        v = values[:, d - 1]
        se = float(v.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        out.append(KlEstimate(d, float(v.mean()), se, samples, v))
    return out


def estimate_kl(lam, s, depth, samples, seed=None, degree_cap=25):
    """Monte-Carlo mean of log L^(depth) over correlated tree pairs."""
    return estimate_kl_curve(lam, s, depth, samples, seed, degree_cap)[-1]


def exact_kl_depth1(lam, s, lmax=40):
    """KL_1 by summing over root degrees (l, l') <= lmax."""
    if s == 0:
        return 0.0
    total = 0.0
    mu, nu = lam * (1 - s), lam * s

    def lpo(m, k):
        return -m + k * math.log(m) - gammaln(k + 1) if m > 0 else (0.0 if k == 0 else -math.inf)

    for l in range(lmax + 1):
        for l2 in range(lmax + 1):
            kmax = min(l, l2)
            logp1 = [lpo(mu, l - k) + lpo(mu, l2 - k) + lpo(nu, k) for k in range(kmax + 1)]
            top = max(logp1)
            if top == -math.inf:
                continue
            p1 = math.exp(top) * sum(math.exp(x - top) for x in logp1)
            if p1 == 0.0:
                continue
            if s >= 1.0:
                log_l = lam - l * math.log(lam) + gammaln(l + 1)
            else:
                w = s / (lam * (1 - s) ** 2)
                terms = [k * math.log(w) + gammaln(l + 1) - gammaln(l - k + 1)
                         + gammaln(l2 + 1) - gammaln(l2 - k + 1) - gammaln(k + 1)
                         for k in range(kmax + 1)]
                t0 = max(terms)
                log_l = (lam * s + (l + l2) * math.log1p(-s)
                         + t0 + math.log(sum(math.exp(x - t0) for x in terms)))
            total += p1 * log_l
    return total
