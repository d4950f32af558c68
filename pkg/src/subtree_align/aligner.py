"""Message passing on a graph pair: ER, configuration-model and weighted modes.

Pair messages live in a dense ``(2 m_A, 2 m_B)`` array indexed by directed
edges (CSR slots) of the two graphs. All values are logarithms.

Running to depth ``d_max`` yields the score matrices of every depth
``d <= d_max`` along the way: the depth-``d`` scores only need the messages
after ``d - 1`` rounds.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import get_num_threads, njit, prange, set_num_threads

from .ensembles import DegreeTripleLaw, ErParams, GraphPairInstance, WeightModel, size_bias
from .errors import CapacityError, DataError, ParameterError
from .kernel import DEFAULT_DEGREE_CAP, log_f0_core, log_f1_core, log_f_er_core
from .trees import ErTreeLaw


@dataclass
class ScoreMatrix:
    log_scores: np.ndarray
    depth: int
    mode: str

    @property
    def n(self):
        return self.log_scores.shape[0]


@dataclass
class MessageState:
    pair: np.ndarray
    hat_a: Optional[np.ndarray] = None
    tilde_a: Optional[np.ndarray] = None
    hat_b: Optional[np.ndarray] = None
    tilde_b: Optional[np.ndarray] = None
    round: int = 0

    @property
    def message_count(self):
        return self.pair.size


# ---------------------------------------------------------------------------
# graph preprocessing


@njit(cache=True)
def _child_lists(indptr, src, dst, rev):
    """For slot a = (i -> j): incoming slots (k -> i), k != j."""
    ns = dst.size
    ptr = np.zeros(ns + 1, dtype=np.int64)
    for a in range(ns):
        i = src[a]
        ptr[a + 1] = ptr[a] + indptr[i + 1] - indptr[i] - 1
    ch = np.empty(ptr[ns], dtype=np.int64)
    for a in range(ns):
        i = src[a]
        j = dst[a]
        k = ptr[a]
        for c in range(indptr[i], indptr[i + 1]):
            if dst[c] != j:
                ch[k] = rev[c]
                k += 1
    return ptr, ch


class _Side:
    def __init__(self, g):
        self.n = g.n
        self.indptr = np.ascontiguousarray(g.indptr)
        self.src = np.ascontiguousarray(g.src)
        self.dst = np.ascontiguousarray(g.dst)
        self.rev = np.ascontiguousarray(g.rev)
        self.deg = np.diff(self.indptr)
        self.cptr, self.ch = _child_lists(self.indptr, self.src, self.dst, self.rev)
        self.slot_weights = None if g.weights is None else np.asarray(g.weights)[g.eid]

    @property
    def max_deg(self):
        return int(self.deg.max()) if self.deg.size else 0


def _check_capacity(sa, sb, cap):
    da, db = sa.max_deg, sb.max_deg
    if min(da, db) > cap:
        i = int(np.argmax(sa.deg))
        i2 = int(np.argmax(sb.deg))
        raise CapacityError(
            f"vertex pair ({i}, {i2}) has degrees ({da}, {db}); "
            f"min exceeds the degree cap {cap}")
    return max(da, db, 1), max(min(da, db), 1)


# ---------------------------------------------------------------------------
# compiled rounds


@njit(parallel=True, cache=True)
def _er_round(prev, nxt, pa, ca, pb, cb, lam, s, offset, use_offset, rows, cols):
    na, nb = prev.shape
    for a in prange(na):
        m = np.empty((rows, cols))
        out = np.empty(cols + 1)
        dp = np.empty(1 << cols)
        a0 = pa[a]
        l = pa[a + 1] - a0
        for b in range(nb):
            b0 = pb[b]
            l2 = pb[b + 1] - b0
            if l >= l2:
                for x in range(l):
                    row = ca[a0 + x]
                    for y in range(l2):
                        m[x, y] = prev[row, cb[b0 + y]]
                v = log_f_er_core(m, l, l2, lam, s, out, dp)
            else:
                for y in range(l2):
                    col = cb[b0 + y]
                    for x in range(l):
                        m[y, x] = prev[ca[a0 + x], col]
                v = log_f_er_core(m, l2, l, lam, s, out, dp)
            if use_offset:
                v += offset[a, b]
            nxt[a, b] = v


@njit(parallel=True, cache=True)
def _er_scores(msg, ipa, ra, ipb, rb, lam, s, scores, rows, cols):
    n, n2 = scores.shape
    for i in prange(n):
        m = np.empty((rows, cols))
        out = np.empty(cols + 1)
        dp = np.empty(1 << cols)
        a0 = ipa[i]
        l = ipa[i + 1] - a0
        for i2 in range(n2):
            b0 = ipb[i2]
            l2 = ipb[i2 + 1] - b0
            if l >= l2:
                for x in range(l):
                    row = ra[a0 + x]
                    for y in range(l2):
                        m[x, y] = msg[row, rb[b0 + y]]
                scores[i, i2] = log_f_er_core(m, l, l2, lam, s, out, dp)
            else:
                for y in range(l2):
                    col = rb[b0 + y]
                    for x in range(l):
                        m[y, x] = msg[ra[a0 + x], col]
                scores[i, i2] = log_f_er_core(m, l2, l, lam, s, out, dp)


@njit(parallel=True, cache=True)
def _general_round(prev, nxt, tilde_a, tilde_b, pa, ca, pb, cb, log_q3,
                   offset, use_offset, rows, cols):
    na, nb = prev.shape
    for a in prange(na):
        m = np.empty((rows, cols))
        rw = np.empty(rows)
        cw = np.empty(rows)
        out = np.empty(cols + 1)
        dp = np.empty(1 << cols)
        a0 = pa[a]
        l = pa[a + 1] - a0
        for b in range(nb):
            b0 = pb[b]
            l2 = pb[b + 1] - b0
            if l >= l2:
                for x in range(l):
                    row = ca[a0 + x]
                    rw[x] = tilde_a[row]
                    for y in range(l2):
                        m[x, y] = prev[row, cb[b0 + y]]
                for y in range(l2):
                    cw[y] = tilde_b[cb[b0 + y]]
                v = log_f1_core(m, l, l2, rw, cw, l, l2, log_q3, out, dp)
            else:
                for y in range(l2):
                    col = cb[b0 + y]
                    rw[y] = tilde_b[col]
                    for x in range(l):
                        m[y, x] = prev[ca[a0 + x], col]
                for x in range(l):
                    cw[x] = tilde_a[ca[a0 + x]]
                v = log_f1_core(m, l2, l, rw, cw, l, l2, log_q3, out, dp)
            if use_offset:
                v += offset[a, b]
            nxt[a, b] = v


@njit(parallel=True, cache=True)
def _general_scores(msg, tilde_a, tilde_b, ipa, ra, ipb, rb, log_q3, f0_a, f0_b,
                    scores, rows, cols):
    n, n2 = scores.shape
    for i in prange(n):
        m = np.empty((rows, cols))
        rw = np.empty(rows)
        cw = np.empty(rows)
        out = np.empty(cols + 1)
        dp = np.empty(1 << cols)
        a0 = ipa[i]
        l = ipa[i + 1] - a0
        for i2 in range(n2):
            b0 = ipb[i2]
            l2 = ipb[i2 + 1] - b0
            if l >= l2:
                for x in range(l):
                    row = ra[a0 + x]
                    rw[x] = tilde_a[row]
                    for y in range(l2):
                        m[x, y] = msg[row, rb[b0 + y]]
                for y in range(l2):
                    cw[y] = tilde_b[rb[b0 + y]]
                v = log_f1_core(m, l, l2, rw, cw, l, l2, log_q3, out, dp)
            else:
                for y in range(l2):
                    col = rb[b0 + y]
                    rw[y] = tilde_b[col]
                    for x in range(l):
                        m[y, x] = msg[ra[a0 + x], col]
                for x in range(l):
                    cw[x] = tilde_a[ra[a0 + x]]
                v = log_f1_core(m, l2, l, rw, cw, l, l2, log_q3, out, dp)
            scores[i, i2] = v - f0_a[i] - f0_b[i2]


@njit(cache=True)
def _scalar_round(hat, tilde, new_hat, new_tilde, ptr, ch, log_hat2, log_tilde2,
                  weight_terms, use_weights, maxdeg):
    u = np.empty(maxdeg + 1)
    v = np.empty(maxdeg + 1)
    e = np.empty(maxdeg + 2)
    for a in range(hat.size):
        a0 = ptr[a]
        l = ptr[a + 1] - a0
        for x in range(l):
            u[x] = hat[ch[a0 + x]]
            v[x] = tilde[ch[a0 + x]]
        h = log_f0_core(l, u, v, log_hat2, e)
        t = log_f0_core(l, u, v, log_tilde2, e)
        if use_weights:
            h += weight_terms[a]
            t += weight_terms[a]
        new_hat[a] = h
        new_tilde[a] = t


@njit(cache=True)
def _vertex_f0(hat, tilde, indptr, rev, log_q2, maxdeg):
    n = indptr.size - 1
    res = np.empty(n)
    u = np.empty(maxdeg + 1)
    v = np.empty(maxdeg + 1)
    e = np.empty(maxdeg + 2)
    for i in range(n):
        a0 = indptr[i]
        l = indptr[i + 1] - a0
        for x in range(l):
            u[x] = hat[rev[a0 + x]]
            v[x] = tilde[rev[a0 + x]]
        res[i] = log_f0_core(l, u, v, log_q2, e)
    return res


# ---------------------------------------------------------------------------
# drivers


def _resolve_base(base):
    if isinstance(base, (ErParams, ErTreeLaw)):
        return ("er", float(base.lam), float(base.s))
    if isinstance(base, DegreeTripleLaw):
        return ("general", base)
    if isinstance(base, tuple) and len(base) == 2:
        lam, s = float(base[0]), float(base[1])
        if not lam > 0 or not 0.0 <= s <= 1.0:
            raise ParameterError("need lam > 0 and 0 <= s <= 1")
        return ("er", lam, s)
    raise ParameterError("base must be (lam, s), ErParams, ErTreeLaw or DegreeTripleLaw")


def _weight_offsets(sa, sb, model, er):
    if sa.slot_weights is None or sb.slot_weights is None:
        raise DataError("weighted mode needs weights on every edge of both graphs")
    wa, wb = sa.slot_weights, sb.slot_weights
    if np.any(~np.isfinite(wa)) or np.any(~np.isfinite(wb)):
        raise DataError("missing or non-finite edge weight")
    joint = model.log_density(wa[:, None], wb[None, :])
    ma = model.log_marginal_density(wa)
    mb = model.log_marginal_density(wb)
    if er:
        # ratio form: rho / (rho_m rho_m') on each matched pair of edges
        pair = joint - ma[:, None] - mb[None, :]
    else:
        pair = joint
    return np.ascontiguousarray(pair, dtype=np.float64), ma, mb


def iterate_scores(instance, base, d_max, model=None, degree_cap=DEFAULT_DEGREE_CAP,
                   threads=None, keep_state=False):
    """Yield ``ScoreMatrix`` for depths 1..d_max (one message run).

    ``base`` selects the ensemble: ``(lam, s)``/``ErParams``/``ErTreeLaw`` for
    correlated ER, a ``DegreeTripleLaw`` for the configuration model. With a
    ``WeightModel`` the edge weights of the instance enter the messages.
    When ``keep_state`` is set, each yielded score carries the message state
    it was computed from as ``score.state``.
    """
    if d_max < 1:
        raise ParameterError("depth must be >= 1")
    if not isinstance(instance, GraphPairInstance):
        raise ParameterError("instance must be a GraphPairInstance")
    resolved = _resolve_base(base)
    sa, sb = _Side(instance.graph_a), _Side(instance.graph_b)
    rows, cols = _check_capacity(sa, sb, degree_cap)
    previous_threads = get_num_threads()
    if threads:
        set_num_threads(int(threads))
    try:
        if resolved[0] == "er":
            yield from _iterate_er(sa, sb, resolved[1], resolved[2], d_max, model,
                                   rows, cols, keep_state)
        else:
            yield from _iterate_general(sa, sb, resolved[1], d_max, model,
                                        rows, cols, keep_state)
    finally:
        set_num_threads(previous_threads)


def _iterate_er(sa, sb, lam, s, d_max, model, rows, cols, keep_state):
    mode = "er" if model is None else f"er+{model.kind}"
    shape = (sa.dst.size, sb.dst.size)
    if model is not None:
        offset, _, _ = _weight_offsets(sa, sb, model, er=True)
        msg = offset.copy()
        use = True
    else:
        offset = np.zeros((1, 1))
        msg = np.zeros(shape)
        use = False
    nxt = np.empty(shape)
    for d in range(1, d_max + 1):
        if d > 1:
            _er_round(msg, nxt, sa.cptr, sa.ch, sb.cptr, sb.ch, lam, s,
                      offset, use, rows, cols)
            msg, nxt = nxt, msg
        scores = np.empty((sa.n, sb.n))
        _er_scores(msg, sa.indptr, sa.rev, sb.indptr, sb.rev, lam, s, scores, rows, cols)
        out = ScoreMatrix(scores, d, mode)
        if keep_state:
            out.state = MessageState(msg.copy(), round=d - 1)
        yield out


def _biased_laws(q):
    # A law without blue (or without bicolored) half-edges leaves the matching
    # size-biased law undefined, but then every term using it carries weight
    # q = 0; any proper law keeps those messages finite and out of the result.
    mean_b, _, mean_bi = q.mean()
    if mean_b == 0 and mean_bi == 0:
        stand_in = DegreeTripleLaw.point_mass(0, 0, 0)
        return stand_in, stand_in
    if mean_b == 0:
        hat, _, _ = size_bias(q, ("hat",))
        return hat, hat
    if mean_bi == 0:
        _, tilde, _ = size_bias(q, ("tilde",))
        return tilde, tilde
    hat, tilde, _ = size_bias(q, ("hat", "tilde"))
    return hat, tilde


def _iterate_general(sa, sb, q, d_max, model, rows, cols, keep_state):
    mode = "general" if model is None else f"general+{model.kind}"
    hat_law, tilde_law = _biased_laws(q)
    log_q3, log_q2 = q.log_table, q.log_marginal
    lh3 = hat_law.log_table
    lh2, lt2 = hat_law.log_marginal, tilde_law.log_marginal
    shape = (sa.dst.size, sb.dst.size)
    if model is not None:
        offset, wma, wmb = _weight_offsets(sa, sb, model, er=False)
        msg = offset.copy()
        hat_a, tilde_a = wma.copy(), wma.copy()
        hat_b, tilde_b = wmb.copy(), wmb.copy()
        use = True
    else:
        offset = np.zeros((1, 1))
        wma = np.zeros(1)
        wmb = np.zeros(1)
        msg = np.zeros(shape)
        hat_a, tilde_a = np.zeros(sa.dst.size), np.zeros(sa.dst.size)
        hat_b, tilde_b = np.zeros(sb.dst.size), np.zeros(sb.dst.size)
        use = False
    nxt = np.empty(shape)
    ma, mb = max(sa.max_deg, 1), max(sb.max_deg, 1)
    for d in range(1, d_max + 1):
        if d > 1:
            _general_round(msg, nxt, tilde_a, tilde_b, sa.cptr, sa.ch, sb.cptr, sb.ch,
                           lh3, offset, use, rows, cols)
            msg, nxt = nxt, msg
            new = [np.empty_like(x) for x in (hat_a, tilde_a, hat_b, tilde_b)]
            _scalar_round(hat_a, tilde_a, new[0], new[1], sa.cptr, sa.ch, lh2, lt2,
                          wma, use, ma)
            _scalar_round(hat_b, tilde_b, new[2], new[3], sb.cptr, sb.ch, lh2, lt2,
                          wmb, use, mb)
            hat_a, tilde_a, hat_b, tilde_b = new
        f0_a = _vertex_f0(hat_a, tilde_a, sa.indptr, sa.rev, log_q2, ma)
        f0_b = _vertex_f0(hat_b, tilde_b, sb.indptr, sb.rev, log_q2, mb)
        scores = np.empty((sa.n, sb.n))
        _general_scores(msg, tilde_a, tilde_b, sa.indptr, sa.rev, sb.indptr, sb.rev,
                        log_q3, f0_a, f0_b, scores, rows, cols)
        out = ScoreMatrix(scores, d, mode)
        if keep_state:
            out.state = MessageState(msg.copy(), hat_a.copy(), tilde_a.copy(),
                                     hat_b.copy(), tilde_b.copy(), round=d - 1)
        yield out


def _last(gen):
    out = None
    for out in gen:
        pass
    return out


def run_mp_er(instance, lam, s, depth, degree_cap=DEFAULT_DEGREE_CAP, threads=None):
    """Depth-``depth`` scores for the correlated ER ensemble (weights ignored)."""
    return _last(iterate_scores(instance, (lam, s), depth, None, degree_cap, threads))


def run_mp_general(instance, q, depth, degree_cap=DEFAULT_DEGREE_CAP, threads=None):
    """Depth-``depth`` scores for the configuration-model ensemble with law ``q``."""
    if not isinstance(q, DegreeTripleLaw):
        raise ParameterError("q must be a DegreeTripleLaw")
    return _last(iterate_scores(instance, q, depth, None, degree_cap, threads))


def run_mp_weighted(instance, base, model, depth, degree_cap=DEFAULT_DEGREE_CAP,
                    threads=None):
    """Depth-``depth`` scores using edge weights distributed by ``model``."""
    if not isinstance(model, WeightModel):
        raise ParameterError("model must be a WeightModel")
    return _last(iterate_scores(instance, base, depth, model, degree_cap, threads))
