"""Rooted trees, colored Galton-Watson trees, and tree-pair likelihoods.

Trees are stored in breadth-first order with the root at index 0, so that
each generation and each sibling group is a contiguous index range. The
children of node ``u`` are the nodes ``child_start[u] .. child_start[u+1]-1``.
"""
import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.special import gammaln

from ._random import as_generator
from .ensembles import BICOLORED, BLUE, RED, DegreeTripleLaw, size_bias
from .errors import CapacityError, ParameterError
from .kernel import (
    DEFAULT_DEGREE_CAP,
    log_f0_general,
    log_f1_general,
    log_f_er_core,
)


class RootedTree:
    """Finite rooted tree in BFS layout.

    ``labels[k]`` is the caller's name for node ``k`` (defaults to ``k``) and
    ``weights[k]`` the weight of the edge from ``k`` to its parent (NaN at
    the root), when weights are present.
    """

    def __init__(self, parent, labels=None, weights=None):
        parent = np.asarray(parent, dtype=np.int64)
        n = parent.size
        if n == 0:
            raise ParameterError("a tree has at least a root")
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1:
            raise ParameterError("exactly one root (parent -1) required")
        children = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if p >= 0:
                if p >= n:
                    raise ParameterError("parent index out of range")
                children[p].append(v)
        order = []
        queue = deque([int(roots[0])])
        while queue:
            u = queue.popleft()
            order.append(u)
            queue.extend(children[u])
        if len(order) != n:
            raise ParameterError("parent links contain a cycle")
        new_index = np.empty(n, dtype=np.int64)
        new_index[order] = np.arange(n)
        order = np.asarray(order)
        self.parent = np.where(parent[order] < 0, -1, new_index[parent[order]])
        counts = np.array([len(children[u]) for u in order], dtype=np.int64)
        self.child_start = np.empty(n + 1, dtype=np.int64)
        self.child_start[0] = 1
        np.cumsum(counts, out=self.child_start[1:])
        self.child_start[1:] += 1
        level = np.zeros(n, dtype=np.int64)
        for k in range(1, n):
            level[k] = level[self.parent[k]] + 1
        self.level = level
        self.level_ptr = np.searchsorted(level, np.arange(level[-1] + 2))
        self.labels = (np.arange(n) if labels is None
                       else np.asarray(labels)[order])
        self.weights = None
        if weights is not None:
            self.weights = np.asarray(weights, dtype=np.float64)[order]
        for a in (self.parent, self.child_start, self.level, self.level_ptr):
            a.flags.writeable = False

    # construction helpers -------------------------------------------------
    @classmethod
    def from_edges(cls, root, edges, weights=None):
        """Build from (parent_label, child_label) pairs; labels are kept."""
        names = [root] + [c for _, c in edges]
        index = {name: k for k, name in enumerate(names)}
        if len(index) != len(names):
            raise ParameterError("duplicate node label")
        parent = [-1] * len(names)
        for p, c in edges:
            parent[index[c]] = index[p]
        w = None
        if weights is not None:
            w = [np.nan] + list(weights)
        return cls(parent, labels=names, weights=w)

    @classmethod
    def from_nested(cls, text):
        """Parse the parenthesized form, e.g. ``"(()(()))"``."""
        parent, stack = [], []
        for ch in text.strip():
            if ch == "(":
                parent.append(stack[-1] if stack else -1)
                stack.append(len(parent) - 1)
            elif ch == ")":
                if not stack:
                    raise ParameterError("unbalanced parentheses")
                stack.pop()
            elif not ch.isspace():
                raise ParameterError(f"unexpected character {ch!r}")
        if stack or not parent or parent.count(-1) != 1:
            raise ParameterError("malformed nested tree string")
        return cls(parent)

    @classmethod
    def single(cls):
        return cls([-1])

    # accessors -------------------------------------------------------------
    @property
    def size(self):
        return self.parent.size

    @property
    def depth(self):
        return int(self.level[-1])

    def n_children(self, u):
        return int(self.child_start[u + 1] - self.child_start[u])

    def children(self, u):
        return range(int(self.child_start[u]), int(self.child_start[u + 1]))

    def generation(self, g):
        if g >= self.level_ptr.size - 1:
            return range(0)
        return range(int(self.level_ptr[g]), int(self.level_ptr[g + 1]))

    def truncate(self, d):
        keep = int(self.level_ptr[min(d + 1, self.level_ptr.size - 1)])
        return RootedTree(self.parent[:keep], self.labels[:keep],
                          None if self.weights is None else self.weights[:keep])

    def label_set(self):
        return set(self.labels.tolist())

    def to_nested(self, u=0):
        return "(" + "".join(self.to_nested(c) for c in self.children(u)) + ")"

    def canonical(self, u=0):
        """Label-free canonical string: equal iff the trees are isomorphic."""
        return "(" + "".join(sorted(self.canonical(c) for c in self.children(u))) + ")"

    def __repr__(self):
        return f"RootedTree(size={self.size}, depth={self.depth})"


class ColoredTree:
    """Rooted tree whose edge to the parent of node ``k`` has ``colors[k]``."""

    def __init__(self, tree, colors):
        colors = np.asarray(colors, dtype=np.int8)
        if colors.size != tree.size:
            raise ParameterError("one color per node (root entry ignored)")
        self.tree = tree
        self.colors = colors

    @classmethod
    def from_edges(cls, root, edges):
        """``edges`` holds (parent_label, child_label, color) triples."""
        tree = RootedTree.from_edges(root, [(p, c) for p, c, _ in edges])
        color_of = {c: col for _, c, col in edges}
        colors = [-1 if lab == root else color_of[lab] for lab in tree.labels.tolist()]
        return cls(tree, colors)

    @property
    def size(self):
        return self.tree.size


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class ErTreeLaw:
    lam: float
    s: float

    def __post_init__(self):
        if not self.lam > 0 or not 0.0 <= self.s <= 1.0:
            raise ParameterError("need lam > 0 and 0 <= s <= 1")


@dataclass(frozen=True)
class GeneralTreeLaw:
    """Configuration-model law; ``variant`` picks the root law
    (``base`` = q, ``hat``, ``tilde`` or ``dot``)."""

    q: DegreeTripleLaw
    variant: str = "base"

    def __post_init__(self):
        if self.variant not in ("base", "hat", "tilde", "dot"):
            raise ParameterError(f"unknown variant {self.variant!r}")


def sample_gw_poisson(lam, depth, seed=None):
    """Poisson(lam) Galton-Watson tree cut at generation ``depth``."""
    if not lam > 0 or depth < 0:
        raise ParameterError("need lam > 0 and depth >= 0")
    rng = as_generator(seed)
    parent = [-1]
    frontier = np.array([0])
    for _ in range(depth):
        if frontier.size == 0:
            break
        counts = rng.poisson(lam, size=frontier.size)
        kids = np.repeat(frontier, counts)
        first = len(parent)
        parent.extend(kids.tolist())
        frontier = np.arange(first, len(parent))
    return RootedTree(parent)


def sample_colored_gw(law, depth, seed=None):
    """Colored tree from either an ``ErTreeLaw`` or a ``GeneralTreeLaw``."""
    if depth < 0:
        raise ParameterError("depth must be >= 0")
    rng = as_generator(seed)
    if isinstance(law, ErTreeLaw):
        means = np.array([law.lam * (1 - law.s), law.lam * (1 - law.s), law.lam * law.s])

        def draw(types):
            return rng.poisson(means, size=(types.size, 3))
        root_type = 0
    elif isinstance(law, GeneralTreeLaw):
        hat, tilde, dot = size_bias(law.q, _needed_variants(law.q))
        # node types: 0 base, 1 hat, 2 tilde, 3 dot
        laws = [law.q, hat, tilde, dot]

        def draw(types):
            out = np.zeros((types.size, 3), dtype=np.int64)
            for t in np.unique(types):
                sel = types == t
                if laws[t] is None:
                    raise ParameterError("size-biased law needed but undefined")
                out[sel] = laws[t].sample(rng, int(sel.sum()))
            return out
        root_type = {"base": 0, "hat": 1, "tilde": 2, "dot": 3}[law.variant]
    else:
        raise ParameterError("law must be ErTreeLaw or GeneralTreeLaw")
    # child type by edge color: blue -> tilde, red -> dot, bicolored -> hat
    child_type = {BLUE: 2, RED: 3, BICOLORED: 1}
    parent, colors = [-1], [-1]
    frontier = np.array([0])
    types = np.array([root_type])
    for _ in range(depth):
        if frontier.size == 0:
            break
        counts = draw(types)
        new_parent, new_color = [], []
        for col in (BLUE, RED, BICOLORED):
            new_parent.append(np.repeat(frontier, counts[:, col]))
            new_color.append(np.full(int(counts[:, col].sum()), col))
        new_parent = np.concatenate(new_parent)
        new_color = np.concatenate(new_color)
        order = np.argsort(new_parent, kind="stable")
        new_parent, new_color = new_parent[order], new_color[order]
        first = len(parent)
        parent.extend(new_parent.tolist())
        colors.extend(new_color.tolist())
        frontier = np.arange(first, len(parent))
        types = np.array([child_type[c] for c in new_color.tolist()], dtype=np.int64)
    tree = RootedTree(parent)
    return ColoredTree(tree, np.asarray(colors)[tree.labels])


def _needed_variants(q):
    mean_b, _, mean_bi = q.mean()
    out = []
    if mean_bi > 0:
        out.append("hat")
    if mean_b > 0:
        out.extend(["tilde", "dot"])
    return tuple(out)


def project_pair(colored):
    """(blue+bicolored, red+bicolored) root components of a colored tree."""
    t = colored.tree
    out = []
    for keep in ((BLUE, BICOLORED), (RED, BICOLORED)):
        idx, parent = [0], [-1]
        pos = {0: 0}
        for v in range(1, t.size):
            p = int(t.parent[v])
            if p in pos and colored.colors[v] in keep:
                pos[v] = len(idx)
                idx.append(v)
                parent.append(pos[p])
        idx = np.asarray(idx)
        weights = None if t.weights is None else t.weights[idx]
        out.append(RootedTree(parent, labels=t.labels[idx], weights=weights))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Null law and likelihood ratio


def _poisson_logpmf(lam, k):
    k = np.asarray(k, dtype=np.float64)
    return -lam + k * math.log(lam) - gammaln(k + 1)


def log_p0(tree, lam, depth):
    """log P0^(depth) of a Poisson GW tree (generations beyond depth ignored)."""
    if depth == 0:
        return 0.0
    stop = int(tree.level_ptr[min(depth, tree.level_ptr.size - 1)])
    counts = np.diff(tree.child_start)[:stop]
    return float(np.sum(_poisson_logpmf(lam, counts)))


@njit(cache=True)
def _tree_lr_er(cs1, lp1, cs2, lp2, depth, lam, s, cap):
    # values at generation `depth` are log 1 = 0
    a0, a1 = lp1[depth], lp1[depth + 1]
    b0, b1 = lp2[depth], lp2[depth + 1]
    prev = np.zeros((a1 - a0, b1 - b0))
    pa0, pb0 = a0, b0
    m = np.empty((cap_rows(cs1, lp1, cs2, lp2, depth), cap + 1))
    out = np.empty(cap + 1)
    dp = np.empty(1 << cap)
    for g in range(depth - 1, -1, -1):
        a0, a1 = lp1[g], lp1[g + 1]
        b0, b1 = lp2[g], lp2[g + 1]
        cur = np.empty((a1 - a0, b1 - b0))
        for u in range(a0, a1):
            c0, l = cs1[u], cs1[u + 1] - cs1[u]
            for v in range(b0, b1):
                e0, l2 = cs2[v], cs2[v + 1] - cs2[v]
                if l >= l2:
                    for i in range(l):
                        for j in range(l2):
                            m[i, j] = prev[c0 + i - pa0, e0 + j - pb0]
                    cur[u - a0, v - b0] = log_f_er_core(m, l, l2, lam, s, out, dp)
                else:
                    for i in range(l2):
                        for j in range(l):
                            m[i, j] = prev[c0 + j - pa0, e0 + i - pb0]
                    cur[u - a0, v - b0] = log_f_er_core(m, l2, l, lam, s, out, dp)
        prev = cur
        pa0, pb0 = a0, b0
    return prev[0, 0]


@njit(cache=True)
def cap_rows(cs1, lp1, cs2, lp2, depth):
    best = 1
    for u in range(lp1[min(depth, lp1.size - 1)]):
        best = max(best, cs1[u + 1] - cs1[u])
    for u in range(lp2[min(depth, lp2.size - 1)]):
        best = max(best, cs2[u + 1] - cs2[u])
    return best


def _padded_level_ptr(tree, depth):
    lp = np.asarray(tree.level_ptr)
    if lp.size < depth + 2:
        lp = np.concatenate([lp, np.full(depth + 2 - lp.size, lp[-1])])
    return lp[:depth + 2].astype(np.int64)


def _check_tree_cap(t, t2, depth, cap):
    nc1 = np.diff(t.child_start)
    nc2 = np.diff(t2.child_start)
    need = 0
    for g in range(depth):
        r1, r2 = t.generation(g), t2.generation(g)
        if len(r1) == 0 or len(r2) == 0:
            break
        m1 = int(nc1[r1.start:r1.stop].max())
        m2 = int(nc2[r2.start:r2.stop].max())
        if min(m1, m2) > cap:
            raise CapacityError(
                f"generation {g}: nodes with {m1} and {m2} children exceed "
                f"the degree cap {cap}")
        need = max(need, min(m1, m2))
    return need


def likelihood_ratio(t, t2, lam, s, depth, degree_cap=DEFAULT_DEGREE_CAP):
    """log L^(depth)(T, T') for the correlated ER tree law.

    Nodes below generation ``depth`` are ignored, so a tree sampled deeper
    can be evaluated at every smaller depth.
    """
    if depth < 0:
        raise ParameterError("depth must be >= 0")
    if not lam > 0 or not 0.0 <= s <= 1.0:
        raise ParameterError("need lam > 0 and 0 <= s <= 1")
    if depth == 0:
        return 0.0
    need = _check_tree_cap(t, t2, depth, degree_cap)
    return float(_tree_lr_er(t.child_start, _padded_level_ptr(t, depth),
                             t2.child_start, _padded_level_ptr(t2, depth),
                             depth, float(lam), float(s), max(need, 1)))


# ---------------------------------------------------------------------------
# Generalized-law recursions (kernel based, plain Python)


class _GeneralTables:
    def __init__(self, q):
        hat, tilde, dot = size_bias(q, _needed_variants(q))
        self.laws = {"base": q, "hat": hat, "tilde": tilde, "dot": dot}

    def log3(self, variant):
        law = self.laws[variant]
        if law is None:
            raise ParameterError(f"size-biased law {variant!r} is undefined")
        return law.log_table

    def log2(self, variant):
        law = self.laws[variant]
        if law is None:
            raise ParameterError(f"size-biased law {variant!r} is undefined")
        return law.log_marginal


def log_p0_general(tree, q, depth, variant="base"):
    """log of the marginal law of b(T) for a configuration-model tree law."""
    tables = _GeneralTables(q)

    @lru_cache(maxsize=None)
    def p0(u, d, var):
        if d == 0:
            return 0.0
        kids = list(tree.children(u))
        u_vec = [p0(c, d - 1, "hat") for c in kids]
        v_vec = [p0(c, d - 1, "tilde") for c in kids]
        return log_f0_general(len(kids), u_vec, v_vec, tables.log2(var))

    return p0(0, depth, variant)


def log_p1_general(t, t2, q, depth, variant="base", degree_cap=DEFAULT_DEGREE_CAP):
    """log P1 of a tree pair for a configuration-model tree law."""
    tables = _GeneralTables(q)

    @lru_cache(maxsize=None)
    def p0(tree_id, u, d):
        tree = t if tree_id == 0 else t2
        if d == 0:
            return 0.0
        kids = list(tree.children(u))
        return log_f0_general(len(kids), [p0(tree_id, c, d - 1) for c in kids],
                              [p0t(tree_id, c, d - 1) for c in kids],
                              tables.log2("hat"))

    @lru_cache(maxsize=None)
    def p0t(tree_id, u, d):
        tree = t if tree_id == 0 else t2
        if d == 0:
            return 0.0
        kids = list(tree.children(u))
        return log_f0_general(len(kids), [p0(tree_id, c, d - 1) for c in kids],
                              [p0t(tree_id, c, d - 1) for c in kids],
                              tables.log2("tilde"))

    @lru_cache(maxsize=None)
    def p1(u, v, d, var):
        if d == 0:
            return 0.0
        k1, k2 = list(t.children(u)), list(t2.children(v))
        m = np.array([[p1(a, b, d - 1, "hat") for b in k2] for a in k1]).reshape(len(k1), len(k2))
        return log_f1_general(len(k1), len(k2), m,
                              [p0t(0, a, d - 1) for a in k1],
                              [p0t(1, b, d - 1) for b in k2],
                              tables.log3(var), degree_cap)

    return p1(0, 0, depth, variant)


def likelihood_ratio_general(t, t2, q, depth, degree_cap=DEFAULT_DEGREE_CAP):
    """log P1/(P0 P0) for a configuration-model law."""
    if depth == 0:
        return 0.0
    return (log_p1_general(t, t2, q, depth, degree_cap=degree_cap)
            - log_p0_general(t, q, depth) - log_p0_general(t2, q, depth))


# ---------------------------------------------------------------------------
# Brute-force oracles

BRUTE_FORCE_MAX_NODES = 12


def _logsumexp(values):
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    return top + math.log(sum(math.exp(v - top) for v in vals))


def _log_binom(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _log_po(mu, k):
    if mu == 0:
        return 0.0 if k == 0 else -math.inf
    return -mu + k * math.log(mu) - math.lgamma(k + 1)


def _brute_core(t, t2, depth, log_q3, log_p0_child, log_p0_child2, log_p1_child, var):
    """Literal sum over (I, I', sigma) of the P1 recursion at the root pair."""

    def rec(u, v, d, var):
        if d == 0:
            return 0.0
        k1, k2 = list(t.children(u)), list(t2.children(v))
        l, l2 = len(k1), len(k2)
        terms = []
        for k in range(min(l, l2) + 1):
            lq = log_q3(var, l - k, l2 - k, k)
            if lq == -math.inf:
                continue
            pref = lq - _log_binom(l, k) - _log_binom(l2, k) - math.lgamma(k + 1)
            for rows in itertools.combinations(range(l), k):
                for cols in itertools.permutations(range(l2), k):
                    acc = pref
                    for a, b in zip(rows, cols):
                        acc += rec(k1[a], k2[b], d - 1, log_p1_child)
                    for a in set(range(l)) - set(rows):
                        acc += log_p0_child(k1[a], d - 1)
                    for b in set(range(l2)) - set(cols):
                        acc += log_p0_child2(k2[b], d - 1)
                    terms.append(acc)
        return _logsumexp(terms)

    return rec(0, 0, depth, var)


def _brute_p0_general(tree, logq2, depth, variant):
    def rec(u, d, var):
        if d == 0:
            return 0.0
        kids = list(tree.children(u))
        l = len(kids)
        terms = []
        for k in range(l + 1):
            lq = logq2(var, l - k, k)
            if lq == -math.inf:
                continue
            for chosen in itertools.combinations(range(l), k):
                acc = lq - _log_binom(l, k)
                for a in range(l):
                    acc += rec(kids[a], d - 1, "hat" if a in chosen else "tilde")
                terms.append(acc)
        return _logsumexp(terms)

    return rec(0, depth, variant)


def brute_force_p1(t, t2, law, depth, max_nodes=BRUTE_FORCE_MAX_NODES):
    """Enumeration oracle for log P1^(depth)[T, T'] (tiny trees only)."""
    t, t2 = t.truncate(depth), t2.truncate(depth)
    if t.size > max_nodes or t2.size > max_nodes:
        raise CapacityError(
            f"brute force limited to {max_nodes} nodes per tree, got {t.size} and {t2.size}")
    if isinstance(law, ErTreeLaw):
        lam, s = law.lam, law.s

        def log_q3(_var, lb, lr, lbi):
            return (_log_po(lam * (1 - s), lb) + _log_po(lam * (1 - s), lr)
                    + _log_po(lam * s, lbi))

        def p0_first(u, d):
            return log_p0(_subtree(t, u), lam, d)

        def p0_second(u, d):
            return log_p0(_subtree(t2, u), lam, d)

        return _brute_core(t, t2, depth, log_q3, p0_first, p0_second, "base", "base")
    if isinstance(law, GeneralTreeLaw):
        tables = _GeneralTables(law.q)

        def log_q3(var, lb, lr, lbi):
            tab = tables.log3(var)
            if lb >= tab.shape[0] or lr >= tab.shape[1] or lbi >= tab.shape[2]:
                return -math.inf
            return float(tab[lb, lr, lbi])

        def logq2(var, lb, lbi):
            tab = tables.log2(var)
            if lb >= tab.shape[0] or lbi >= tab.shape[1]:
                return -math.inf
            return float(tab[lb, lbi])

        def p0_first(u, d):
            return _brute_p0_general(_subtree(t, u), logq2, d, "tilde")

        def p0_second(u, d):
            return _brute_p0_general(_subtree(t2, u), logq2, d, "tilde")

        return _brute_core(t, t2, depth, log_q3, p0_first, p0_second, "hat", law.variant)
    raise ParameterError("law must be ErTreeLaw or GeneralTreeLaw")


def brute_force_p0_general(tree, q, depth, variant="base"):
    """Enumeration oracle for the configuration-model marginal law."""
    tables = _GeneralTables(q)

    def logq2(var, lb, lbi):
        tab = tables.log2(var)
        if lb >= tab.shape[0] or lbi >= tab.shape[1]:
            return -math.inf
        return float(tab[lb, lbi])

    return _brute_p0_general(tree, logq2, depth, variant)


def _subtree(tree, u):
    nodes = [u]
    parent = [-1]
    pos = {u: 0}
    k = 0
    while k < len(nodes):
        for c in tree.children(nodes[k]):
            pos[c] = len(nodes)
            nodes.append(c)
            parent.append(pos[nodes[k]])
        k += 1
    return RootedTree(parent)


# ---------------------------------------------------------------------------
# Neighborhood extraction from graphs


def neighborhood_tree(graph, root, depth):
    """Depth-``depth`` ball around ``root`` as a BFS tree.

    Returns ``(tree, acyclic)``; ``acyclic`` is True when the subgraph induced
    by the ball has no cycle, in which case the tree is exactly the ball.
    """
    parent, labels, weights = [-1], [root], [np.nan]
    pos = {root: 0}
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        if dist[u] == depth:
            continue
        for v in graph.neighbors(u).tolist():
            if v not in dist:
                dist[v] = dist[u] + 1
                pos[v] = len(labels)
                parent.append(pos[u])
                labels.append(v)
                if graph.weights is not None:
                    weights.append(graph.edge_weight(u, v))
                queue.append(v)
    induced = sum(1 for u in pos for v in graph.neighbors(u).tolist() if v in pos) // 2
    acyclic = induced == len(pos) - 1
    tree = RootedTree(parent, labels=labels,
                      weights=weights if graph.weights is not None else None)
    return tree, acyclic


def computational_tree(graph, root, depth):
    """Tree of non-backtracking walks of length <= ``depth`` from ``root``."""
    parent, labels, weights = [-1], [root], [np.nan]
    frontier = [(0, root, -1)]
    for _ in range(depth):
        nxt = []
        for idx, u, came_from in frontier:
            for v in graph.neighbors(u).tolist():
                if v == came_from:
                    continue
                parent.append(idx)
                labels.append(v)
                if graph.weights is not None:
                    weights.append(graph.edge_weight(u, v))
                nxt.append((len(parent) - 1, v, u))
        frontier = nxt
    return RootedTree(parent, labels=labels,
                      weights=weights if graph.weights is not None else None)
