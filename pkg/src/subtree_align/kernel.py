"""Log-domain partial-matching sums and the local update functions built on them.

Every quantity handled here is a logarithm; ``-inf`` encodes an impossible
configuration and propagates through the algebra. The compiled ``_core``
functions assume their arguments are valid (shapes, degree cap) and are meant
to be called from other compiled loops; the plain-Python wrappers validate.

Matrix orientation convention for the cores: ``m[:nr, :nc]`` with
``nc <= nr``; the dynamic program runs over subsets of the ``nc`` columns.
"""
import itertools
import math

import numpy as np
from numba import njit

from .errors import CapacityError, ParameterError

DEFAULT_DEGREE_CAP = 25

NEG_INF = -np.inf


@njit(cache=True)
def logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def log_binom(n, k):
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def matching_sums_core(m, nr, nc, out, dp):
    """Per-size log sums over partial injections, all unmatched weights 1.

    ``out[k]`` (k = 0..nc) receives log of the sum over k-subsets I of rows
    and injections sigma: I -> columns of prod exp(m[i, sigma(i)]).
    ``dp`` must have length >= 2**nc.
    """
    size = 1 << nc
    for S in range(size):
        dp[S] = -np.inf
    dp[0] = 0.0
    for i in range(nr):
        top = size - 1
        for S in range(top, 0, -1):
            v = dp[S]
            for j in range(nc):
                if (S >> j) & 1:
                    w = m[i, j]
                    if w != -np.inf:
                        prev = dp[S ^ (1 << j)]
                        if prev != -np.inf:
                            v = logaddexp(v, prev + w)
            dp[S] = v
    for k in range(nc + 1):
        out[k] = -np.inf
    for S in range(size):
        v = dp[S]
        if v != -np.inf:
            k = _popcount(S)
            out[k] = logaddexp(out[k], v)


@njit(cache=True)
def weighted_matching_sums_core(m, nr, nc, rw, cw, out, dp):
    """As ``matching_sums_core`` with factors exp(rw[i]) for every unmatched
    row and exp(cw[j]) for every unmatched column."""
    size = 1 << nc
    for S in range(size):
        dp[S] = -np.inf
    dp[0] = 0.0
    for i in range(nr):
        ri = rw[i]
        for S in range(size - 1, -1, -1):
            v = dp[S] + ri
            for j in range(nc):
                if (S >> j) & 1:
                    w = m[i, j]
                    if w != -np.inf:
                        prev = dp[S ^ (1 << j)]
                        if prev != -np.inf:
                            v = logaddexp(v, prev + w)
            dp[S] = v
    for k in range(nc + 1):
        out[k] = -np.inf
    for S in range(size):
        v = dp[S]
        if v == -np.inf:
            continue
        for j in range(nc):
            if not (S >> j) & 1:
                v += cw[j]
        if v != -np.inf:
            k = _popcount(S)
            out[k] = logaddexp(out[k], v)


@njit(cache=True)
def log_f_er_core(m, nr, nc, lam, s, out, dp):
    """log f for the correlated ER ensemble on an oriented child matrix.

    ``nr + nc`` equals l + l' whatever the orientation, and f is symmetric,
    so orientation does not matter here.
    """
    if s >= 1.0:
        if nr != nc:
            return -np.inf
        if nc == 0:
            return lam
        matching_sums_core(m, nr, nc, out, dp)
        return lam - nc * math.log(lam) + out[nc]
    base = lam * s + (nr + nc) * math.log1p(-s)
    if nc == 0 or s <= 0.0:
        return base
    logw = math.log(s) - math.log(lam) - 2.0 * math.log1p(-s)
    if nc == 1:
        acc = -np.inf
        for i in range(nr):
            acc = logaddexp(acc, m[i, 0])
        return base + logaddexp(0.0, logw + acc)
    matching_sums_core(m, nr, nc, out, dp)
    acc = 0.0
    for k in range(1, nc + 1):
        if out[k] != -np.inf:
            acc = logaddexp(acc, k * logw + out[k])
    return base + acc


@njit(cache=True)
def _lookup3(table, a, b, c):
    if a >= table.shape[0] or b >= table.shape[1] or c >= table.shape[2]:
        return -np.inf
    return table[a, b, c]


@njit(cache=True)
def _lookup2(table, a, b):
    if a >= table.shape[0] or b >= table.shape[1]:
        return -np.inf
    return table[a, b]


@njit(cache=True)
def log_f1_core(m, nr, nc, rw, cw, l, l2, log_q, out, dp):
    """log f1 on an oriented matrix; ``l``/``l2`` are the unoriented sizes
    (needed because the law is looked up as q(l - k, l2 - k, k))."""
    weighted_matching_sums_core(m, nr, nc, rw, cw, out, dp)
    acc = -np.inf
    for k in range(nc + 1):
        if out[k] == -np.inf:
            continue
        lq = _lookup3(log_q, l - k, l2 - k, k)
        if lq == -np.inf:
            continue
        acc = logaddexp(acc, lq - log_binom(l, k) - log_binom(l2, k)
                        - math.lgamma(k + 1.0) + out[k])
    return acc


@njit(cache=True)
def log_f0_core(l, u, v, log_q2, e):
    """log f0 via an elementary-symmetric-polynomial recursion (``e`` has
    length >= l + 1)."""
    e[0] = 0.0
    for k in range(1, l + 1):
        e[k] = -np.inf
    for i in range(l):
        ui = u[i]
        vi = v[i]
        for k in range(i + 1, 0, -1):
            e[k] = logaddexp(e[k] + vi, e[k - 1] + ui)
        e[0] = e[0] + vi
    acc = -np.inf
    for k in range(l + 1):
        if e[k] == -np.inf:
            continue
        lq = _lookup2(log_q2, l - k, k)
        if lq == -np.inf:
            continue
        acc = logaddexp(acc, lq - log_binom(l, k) + e[k])
    return acc


# ---------------------------------------------------------------------------
# Python-facing wrappers


def _as_log_matrix(m, l=None, l2=None):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        if m.size == 0 and l is not None and l2 is not None:
            m = m.reshape(l, l2)
        else:
            raise ParameterError(f"expected a 2-d log matrix, got shape {m.shape}")
    if l is not None and m.shape != (l, l2):
        raise ParameterError(f"matrix shape {m.shape} does not match ({l}, {l2})")
    if np.any(np.isnan(m)) or np.any(m == np.inf):
        raise ParameterError("log matrix entries must be finite or -inf")
    return m


def _oriented(m):
    """Return (matrix, transposed) with rows >= columns."""
    if m.shape[1] > m.shape[0]:
        return np.ascontiguousarray(m.T), True
    return np.ascontiguousarray(m), False


def _check_cap(nc, degree_cap):
    if nc > degree_cap:
        raise CapacityError(
            f"min side {nc} exceeds the degree cap {degree_cap}"
        )


def log_partial_matching_sum(m, log_weight=0.0, degree_cap=DEFAULT_DEGREE_CAP):
    """Log of the size-k partial-matching sums of exp(m), k = 0..min(l, l').

    Each matched pair additionally carries a factor exp(log_weight).
    """
    m = _as_log_matrix(m)
    mo, _ = _oriented(m)
    nr, nc = mo.shape
    _check_cap(nc, degree_cap)
    out = np.empty(nc + 1)
    dp = np.empty(1 << nc)
    matching_sums_core(mo, nr, nc, out, dp)
    if log_weight != 0.0:
        k = np.arange(nc + 1)
        with np.errstate(invalid="ignore"):
            out = np.where(np.isneginf(out), -np.inf, out + k * log_weight)
    return out


def enumerate_partial_matching_sum(m):
    """Factorial-cost reference for ``log_partial_matching_sum``.

    Enumerates every k-subset of rows and every injection into the columns.
    Only usable for tiny matrices; kept as an independent oracle.
    """
    m = np.asarray(m, dtype=np.float64)
    l, l2 = m.shape
    out = np.full(min(l, l2) + 1, -np.inf)
    for k in range(min(l, l2) + 1):
        terms = []
        for rows in itertools.combinations(range(l), k):
            for cols in itertools.permutations(range(l2), k):
                terms.append(sum(m[r, c] for r, c in zip(rows, cols)))
        finite = [t for t in terms if t != -np.inf]
        if finite:
            top = max(finite)
            out[k] = top + math.log(sum(math.exp(t - top) for t in finite))
    return out


def log_f_er(l, l2, m, lam, s, degree_cap=DEFAULT_DEGREE_CAP):
    """log f(l, l'; exp(m)) for the correlated Erdos-Renyi ensemble."""
    if lam <= 0 or not 0.0 <= s <= 1.0:
        raise ParameterError(f"need lam > 0 and 0 <= s <= 1, got lam={lam}, s={s}")
    m = _as_log_matrix(m, l, l2)
    mo, _ = _oriented(m)
    nr, nc = mo.shape
    _check_cap(nc, degree_cap)
    out = np.empty(nc + 1)
    dp = np.empty(1 << nc)
    return float(log_f_er_core(mo, nr, nc, float(lam), float(s), out, dp))


def log_f1_general(l, l2, m, u, u2, log_q, degree_cap=DEFAULT_DEGREE_CAP):
    """log f1 for a degree-triple law given by its log-table ``log_q[lb, lr, lbi]``.

    ``u`` weights the unmatched children on the first side, ``u2`` on the second.
    """
    m = _as_log_matrix(m, l, l2)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    u2 = np.asarray(u2, dtype=np.float64).reshape(-1)
    if u.size != l or u2.size != l2:
        raise ParameterError("unmatched weight vectors must have lengths l and l2")
    log_q = np.asarray(log_q, dtype=np.float64)
    mo, transposed = _oriented(m)
    rw, cw = (u2, u) if transposed else (u, u2)
    nr, nc = mo.shape
    _check_cap(nc, degree_cap)
    out = np.empty(nc + 1)
    dp = np.empty(1 << nc)
    return float(log_f1_core(mo, nr, nc, np.ascontiguousarray(rw),
                             np.ascontiguousarray(cw), l, l2, log_q, out, dp))


def log_f0_general(l, u, v, log_q2):
    """log f0 for a marginal law given by its log-table ``log_q2[lb, lbi]``.

    ``u`` weights children reached through bicolored edges, ``v`` the others.
    """
    u = np.ascontiguousarray(np.asarray(u, dtype=np.float64).reshape(-1))
    v = np.ascontiguousarray(np.asarray(v, dtype=np.float64).reshape(-1))
    if u.size != l or v.size != l:
        raise ParameterError("u and v must both have length l")
    e = np.empty(l + 1)
    return float(log_f0_core(l, u, v, np.asarray(log_q2, dtype=np.float64), e))
