"""Correlated random graph pairs: Erdos-Renyi, configuration model, weighted.

A pair (A, C) on a shared vertex set is encoded by a three-colored graph
(blue = only in A, red = only in C, bicolored = in both). The observed second
graph B is C relabelled by a uniform permutation ``ground_truth``:
edge (u, v) of C becomes edge (pi(u), pi(v)) of B.
"""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy import stats

from ._random import as_generator
from .errors import (
    DataError,
    DegenerateLawError,
    GenerationError,
    ParameterError,
    ParseError,
)

BLUE, RED, BICOLORED = 0, 1, 2
COLOR_NAMES = {BLUE: "blue", RED: "red", BICOLORED: "bicolored"}


def _readonly(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


class Graph:
    """Simple undirected graph with a fixed edge order.

    ``edges[e] = (u, v)`` with ``u < v``; ``weights[e]`` (optional) is the
    weight of edge ``e``. Directed edges (slots of the CSR arrays) are what the
    message-passing code indexes: slot ``a`` is ``src[a] -> dst[a]`` and
    ``rev[a]`` is the slot of the reverse direction.
    """

    def __init__(self, n, edges, weights=None):
        n = int(n)
        if n < 0:
            raise DataError("vertex count must be non-negative")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise DataError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise DataError("self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        keys = edges[:, 0] * max(n, 1) + edges[:, 1]
        if np.unique(keys).size != keys.size:
            raise DataError("duplicate edge")
        self.n = n
        self.edges = _readonly(edges)
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64).reshape(-1)
            if weights.size != edges.shape[0]:
                raise DataError("one weight per edge required")
            weights = _readonly(weights)
        self.weights = weights
        self._build_csr()

    def _build_csr(self):
        m = self.edges.shape[0]
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        src, dst, eid = src[order], dst[order], eid[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        # the reverse of slot a is the slot holding (dst[a], src[a])
        key = src * max(self.n, 1) + dst
        rkey = dst * max(self.n, 1) + src
        rev = np.searchsorted(key, rkey)
        self.indptr = _readonly(indptr)
        self.src = _readonly(src.astype(np.int64))
        self.dst = _readonly(dst.astype(np.int64))
        self.eid = _readonly(eid.astype(np.int64))
        self.rev = _readonly(rev.astype(np.int64))

    @property
    def m(self):
        return self.edges.shape[0]

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def neighbors(self, i):
        return self.dst[self.indptr[i]:self.indptr[i + 1]]

    def edge_set(self):
        return {(int(u), int(v)) for u, v in self.edges}

    def has_edge(self, u, v):
        u, v = min(u, v), max(u, v)
        lo, hi = self.indptr[u], self.indptr[u + 1]
        k = np.searchsorted(self.dst[lo:hi], v)
        return k < hi - lo and self.dst[lo + k] == v

    def edge_weight(self, u, v):
        if self.weights is None:
            raise DataError("graph is unweighted")
        lo = self.indptr[u]
        k = np.searchsorted(self.dst[lo:self.indptr[u + 1]], v)
        return float(self.weights[self.eid[lo + k]])

    def relabel(self, perm):
        """Graph with every vertex ``u`` renamed ``perm[u]``; edge order kept."""
        perm = np.asarray(perm)
        return Graph(self.n, perm[self.edges], self.weights)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_w = (self.weights is None and other.weights is None) or (
            self.weights is not None and other.weights is not None
            and np.array_equal(self.weights, other.weights))
        return (self.n == other.n and np.array_equal(self.edges, other.edges)
                and same_w)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, weighted={self.weights is not None})"


@dataclass(frozen=True)
class ErParams:
    n: int
    lam: float
    s: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be > 0, got {self.lam}")
        if not 0.0 <= self.s <= 1.0:
            raise ParameterError(f"s must lie in [0, 1], got {self.s}")
        if self.lam * (2.0 - self.s) / self.n > 1.0:
            raise ParameterError("lambda * (2 - s) / n exceeds 1")


@dataclass(frozen=True)
class ColoredGraph:
    """Three-colored simple graph; ``colors[e]`` is BLUE, RED or BICOLORED."""

    n: int
    edges: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        edges = np.sort(np.asarray(self.edges, dtype=np.int64).reshape(-1, 2), axis=1)
        colors = np.asarray(self.colors, dtype=np.int8).reshape(-1)
        if colors.size != edges.shape[0]:
            raise DataError("one color per edge required")
        # Graph() checks self-loops and duplicates over all colors together
        Graph(self.n, edges)
        object.__setattr__(self, "edges", _readonly(edges))
        object.__setattr__(self, "colors", _readonly(colors))

    def subgraph(self, *colors):
        mask = np.isin(self.colors, colors)
        return self.edges[mask]

    def graph_a(self):
        return Graph(self.n, self.subgraph(BLUE, BICOLORED))

    def graph_c(self):
        return Graph(self.n, self.subgraph(RED, BICOLORED))

    def adjacency(self, color):
        adj = [[] for _ in range(self.n)]
        for (u, v) in self.subgraph(color):
            adj[u].append(int(v))
            adj[v].append(int(u))
        return adj


@dataclass(frozen=True)
class GraphPairInstance:
    graph_a: Graph
    graph_b: Graph
    ground_truth: Optional[np.ndarray] = None
    ensemble: Any = None

    def __post_init__(self):
        if self.graph_a.n != self.graph_b.n:
            raise DataError("graphs must have the same vertex count")
        if self.ground_truth is not None:
            gt = np.asarray(self.ground_truth, dtype=np.int64)
            if gt.shape != (self.n,) or not np.array_equal(np.sort(gt), np.arange(self.n)):
                raise DataError("ground truth must be a permutation of range(n)")
            object.__setattr__(self, "ground_truth", _readonly(gt))

    @property
    def n(self):
        return self.graph_a.n

    @property
    def weighted(self):
        return self.graph_a.weights is not None


# ---------------------------------------------------------------------------
# Degree-triple laws


def _poisson_pmf_truncated(mu, cutoff):
    if mu == 0:
        return np.array([1.0])
    k = 0
    while True:
        if stats.poisson.pmf(k, mu) < cutoff and stats.poisson.sf(k, mu) < cutoff and k > mu:
            break
        k += 1
    return stats.poisson.pmf(np.arange(k + 1), mu)


class DegreeTripleLaw:
    """Joint law of (blue, red, bicolored) half-edge counts of a vertex.

    Stored as a dense table ``table[l_b, l_r, l_bi]``. Laws describing the root
    of the colored tree must be symmetric in their first two arguments; the
    size-biased versions derived from them need not be (``symmetric=False``).
    """

    def __init__(self, table, symmetric=True, atol=1e-12):
        if isinstance(table, dict):
            table = self._from_dict(table)
        t = np.array(table, dtype=np.float64)
        if t.ndim != 3:
            raise ParameterError("degree-triple table must be 3-dimensional")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ParameterError("probabilities must be finite and non-negative")
        if abs(t.sum() - 1.0) > atol:
            raise ParameterError(f"probabilities sum to {t.sum()!r}, not 1")
        side = max(t.shape[0], t.shape[1])
        t = np.pad(t, ((0, side - t.shape[0]), (0, side - t.shape[1]), (0, 0)))
        if symmetric and not np.allclose(t, t.transpose(1, 0, 2), atol=atol, rtol=0):
            raise ParameterError("law must satisfy q(lb, lr, lbi) = q(lr, lb, lbi)")
        self.table = _readonly(t)
        self.symmetric = symmetric
        with np.errstate(divide="ignore"):
            self.log_table = _readonly(np.log(t))
            self.marginal = _readonly(t.sum(axis=1))
            self.log_marginal = _readonly(np.log(self.marginal))

    @staticmethod
    def _from_dict(d):
        if not d:
            raise ParameterError("empty degree-triple law")
        dims = np.max(np.array(list(d.keys()), dtype=np.int64), axis=0) + 1
        t = np.zeros(tuple(dims))
        for (lb, lr, lbi), p in d.items():
            if min(lb, lr, lbi) < 0:
                raise ParameterError("degrees must be non-negative")
            t[lb, lr, lbi] += p
        return t

    @classmethod
    def poisson_product(cls, lam, s, cutoff=1e-12):
        """Po(lam(1-s)) x Po(lam(1-s)) x Po(lam s), truncated and renormalized."""
        pb = _poisson_pmf_truncated(lam * (1 - s), cutoff)
        pbi = _poisson_pmf_truncated(lam * s, cutoff)
        t = pb[:, None, None] * pb[None, :, None] * pbi[None, None, :]
        return cls(t / t.sum())

    @classmethod
    def point_mass(cls, lb, lr, lbi, symmetric=None):
        t = np.zeros((max(lb, lr) + 1, max(lb, lr) + 1, lbi + 1))
        t[lb, lr, lbi] = 1.0
        if symmetric is None:
            symmetric = lb == lr
        return cls(t, symmetric=symmetric)

    @property
    def shape(self):
        return self.table.shape

    def as_dict(self):
        return {tuple(int(x) for x in idx): float(self.table[idx])
                for idx in zip(*np.nonzero(self.table))}

    def mean(self):
        """Expected (l_b, l_r, l_bi)."""
        idx = np.indices(self.table.shape)
        return tuple(float((idx[a] * self.table).sum()) for a in range(3))

    def degree_pmf(self):
        """Degree law of the graph made of blue and bicolored edges."""
        kb, _, kbi = self.marginal.shape
        out = np.zeros(kb + kbi - 1)
        for lb in range(kb):
            for lbi in range(kbi):
                out[lb + lbi] += self.marginal[lb, lbi]
        return out

    def sample(self, rng, size):
        rng = as_generator(rng)
        flat = self.table.reshape(-1)
        idx = rng.choice(flat.size, size=size, p=flat / flat.sum())
        return np.stack(np.unravel_index(idx, self.table.shape), axis=-1)

    def __repr__(self):
        return f"DegreeTripleLaw(shape={self.table.shape}, mean={self.mean()})"


def size_bias(q, variants=("hat", "tilde", "dot")):
    """Size-biased laws (q_hat, q_tilde, q_dot) of a degree-triple law.

    q_hat biases on the bicolored count, q_tilde on the blue count, q_dot is
    q_tilde with blue and red exchanged. Only the requested variants are
    computed; the others come back as None.
    """
    t = q.table
    out = {}
    if "hat" in variants:
        mass = np.arange(t.shape[2])
        denom = float((t * mass[None, None, :]).sum())
        if denom <= 0:
            raise DegenerateLawError("no bicolored half-edges: q_hat undefined")
        hat = t[:, :, 1:] * mass[None, None, 1:] / denom
        if hat.shape[2] == 0:
            hat = np.zeros(t.shape[:2] + (1,))
        out["hat"] = DegreeTripleLaw(hat, symmetric=False, atol=1e-10)
    if "tilde" in variants or "dot" in variants:
        mass = np.arange(t.shape[0])
        denom = float((t * mass[:, None, None]).sum())
        if denom <= 0:
            raise DegenerateLawError("no blue half-edges: q_tilde undefined")
        tilde = t[1:, :, :] * mass[1:, None, None] / denom
        tilde_law = DegreeTripleLaw(tilde, symmetric=False, atol=1e-10)
        if "tilde" in variants:
            out["tilde"] = tilde_law
        if "dot" in variants:
            out["dot"] = DegreeTripleLaw(tilde_law.table.transpose(1, 0, 2),
                                         symmetric=False, atol=1e-10)
    return out.get("hat"), out.get("tilde"), out.get("dot")


# ---------------------------------------------------------------------------
# Edge weights

_LOG_2PI = float(np.log(2 * np.pi))


@dataclass(frozen=True)
class WeightModel:
    """Joint edge-weight density with a standard normal marginal.

    kinds:
      product             -- independent weights, rho(w, w') = phi(w) phi(w')
      gaussian_correlated -- bivariate normal with correlation ``rho_coeff``
      equal_weight        -- w' = w; the joint density is taken with respect to
                             the diagonal, i.e. log_density(w, w) = log phi(w)
                             and -inf off the diagonal
    """

    kind: str = "product"
    rho_coeff: float = 0.0

    def __post_init__(self):
        if self.kind not in ("product", "gaussian_correlated", "equal_weight"):
            raise ParameterError(f"unknown weight model {self.kind!r}")
        if self.kind == "gaussian_correlated" and not -1.0 < self.rho_coeff < 1.0:
            raise ParameterError("rho_coeff must lie in (-1, 1)")

    def sample_marginal(self, rng, size=None):
        return as_generator(rng).standard_normal(size)

    def sample_pair(self, rng, size=None):
        rng = as_generator(rng)
        w = rng.standard_normal(size)
        if self.kind == "product":
            return w, rng.standard_normal(size)
        if self.kind == "equal_weight":
            return w, np.array(w, copy=True) if size is not None else w
        z = rng.standard_normal(size)
        r = self.rho_coeff
        return w, r * w + np.sqrt(1.0 - r * r) * z

    def log_marginal_density(self, w):
        w = np.asarray(w, dtype=np.float64)
        return -0.5 * _LOG_2PI - 0.5 * w * w

    def log_density(self, w, w2):
        w = np.asarray(w, dtype=np.float64)
        w2 = np.asarray(w2, dtype=np.float64)
        if self.kind == "product":
            return self.log_marginal_density(w) + self.log_marginal_density(w2)
        if self.kind == "equal_weight":
            return np.where(w == w2, self.log_marginal_density(w), -np.inf)
        r = self.rho_coeff
        one = 1.0 - r * r
        return (-_LOG_2PI - 0.5 * np.log(one)
                - (w * w - 2 * r * w * w2 + w2 * w2) / (2 * one))


@dataclass(frozen=True)
class WeightedEnsemble:
    base: Any
    model: WeightModel


# ---------------------------------------------------------------------------
# Samplers


def _split_colored(colored, perm):
    a = Graph(colored.n, colored.subgraph(BLUE, BICOLORED))
    c_edges = colored.subgraph(RED, BICOLORED)
    b = Graph(colored.n, perm[c_edges])
    return a, b


def _pair_index_to_ij(idx, n):
    # pairs i < j enumerated row by row; row i starts at i*n - i*(i+1)/2
    starts = np.arange(n, dtype=np.int64)
    starts = starts * n - starts * (starts + 1) // 2
    i = np.searchsorted(starts, idx, side="right") - 1
    j = idx - starts[i] + i + 1
    return i, j


def sample_correlated_er(params, seed=None, method="dense"):
    """Draw (G, instance) from the correlated ER ensemble.

    ``method="dense"`` draws one uniform per vertex pair; ``"skip"`` jumps
    between present pairs with geometric gaps. Both produce the same law.
    """
    if not isinstance(params, ErParams):
        raise ParameterError("params must be an ErParams")
    rng = as_generator(seed)
    n, lam, s = params.n, params.lam, params.s
    npairs = n * (n - 1) // 2
    p_bi = lam * s / n
    p_mono = lam * (1 - s) / n
    p_any = p_bi + 2 * p_mono
    if method == "dense":
        u = rng.random(npairs)
        idx = np.flatnonzero(u < p_any)
        u = u[idx]
    elif method == "skip":
        idx = _geometric_skip(rng, npairs, p_any)
        u = rng.random(idx.size) * p_any
    else:
        raise ParameterError(f"unknown method {method!r}")
    colors = np.where(u < p_bi, BICOLORED, np.where(u < p_bi + p_mono, BLUE, RED))
    i, j = _pair_index_to_ij(idx, n)
    colored = ColoredGraph(n, np.stack([i, j], axis=1), colors)
    perm = rng.permutation(n)
    a, b = _split_colored(colored, perm)
    return colored, GraphPairInstance(a, b, perm, params)


def _geometric_skip(rng, npairs, p):
    if p <= 0 or npairs == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(npairs, dtype=np.int64)
    chunks = []
    pos = -1
    expected = int(npairs * p + 10 * np.sqrt(npairs * p) + 10)
    while True:
        gaps = rng.geometric(p, size=expected)
        cand = pos + np.cumsum(gaps)
        keep = cand[cand < npairs]
        chunks.append(keep)
        if keep.size < cand.size:
            break
        pos = cand[-1]
    return np.concatenate(chunks).astype(np.int64)


def sample_configuration_correlated(q, n, seed=None, max_retries=1000):
    """Correlated pair from the three-color configuration model.

    Each vertex draws (l_b, l_r, l_bi) i.i.d. from ``q``; half-edges of each
    color are paired uniformly. Degree sequences with an odd half-edge total
    in some color are redrawn. Non-simple colored graphs (self-loops, or two
    edges of any colors on the same pair) are rejected; ``max_retries``
    bounds these rejections.
    """
    if not isinstance(q, DegreeTripleLaw):
        raise ParameterError("q must be a DegreeTripleLaw")
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = as_generator(seed)
    for _ in range(max_retries):
        deg = _even_degree_sequence(q, n, rng, max_retries)
        edges, colors = [], []
        for color, col in ((BLUE, 0), (RED, 1), (BICOLORED, 2)):
            stubs = np.repeat(np.arange(n), deg[:, col])
            stubs = rng.permutation(stubs).reshape(-1, 2)
            edges.append(stubs)
            colors.append(np.full(stubs.shape[0], color, dtype=np.int8))
        edges = np.sort(np.concatenate(edges), axis=1)
        colors = np.concatenate(colors)
        if np.any(edges[:, 0] == edges[:, 1]):
            continue
        keys = edges[:, 0] * n + edges[:, 1]
        if np.unique(keys).size != keys.size:
            continue
        colored = ColoredGraph(n, edges, colors)
        perm = rng.permutation(n)
        a, b = _split_colored(colored, perm)
        return colored, GraphPairInstance(a, b, perm, q)
    raise GenerationError(
        f"no simple colored graph after {max_retries} attempts"
    )


def _even_degree_sequence(q, n, rng, max_retries):
    # each color's half-edge total must be even; a redraw is far cheaper than
    # a pairing, so these redraws have their own budget (8x: three parities)
    for _ in range(8 * max_retries):
        deg = q.sample(rng, n)
        if not np.any(deg.sum(axis=0) % 2):
            return deg
    raise GenerationError(
        f"no degree sequence with even half-edge totals after {8 * max_retries} draws")


def attach_weights(instance, colored, model, seed=None):
    """Weighted copy of ``instance``: bicolored edges get a correlated pair
    from ``model``, monochromatic edges a marginal draw."""
    if instance.ground_truth is None:
        raise DataError("attaching weights needs the ground-truth permutation")
    perm = np.asarray(instance.ground_truth)
    a, b = _split_colored(colored, perm)
    if a != Graph(instance.n, instance.graph_a.edges) or \
            b != Graph(instance.n, instance.graph_b.edges):
        raise DataError("colored graph is inconsistent with the instance")
    rng = as_generator(seed)
    m = colored.edges.shape[0]
    wa = np.full(m, np.nan)
    wc = np.full(m, np.nan)
    bi = colored.colors == BICOLORED
    blue = colored.colors == BLUE
    red = colored.colors == RED
    x, y = model.sample_pair(rng, int(bi.sum()))
    wa[bi], wc[bi] = x, y
    wa[blue] = model.sample_marginal(rng, int(blue.sum()))
    wc[red] = model.sample_marginal(rng, int(red.sum()))
    in_a = blue | bi
    in_c = red | bi
    ga = Graph(instance.n, colored.edges[in_a], wa[in_a])
    gb = Graph(instance.n, perm[colored.edges[in_c]], wc[in_c])
    return GraphPairInstance(ga, gb, perm, WeightedEnsemble(instance.ensemble, model))


# ---------------------------------------------------------------------------
# Pair files


def save_pair(instance, path):
    """Write ``instance`` in the plain-text pair format."""
    weighted = instance.weighted
    ga, gb = instance.graph_a, instance.graph_b
    lines = [f"{instance.n} {ga.m} {gb.m} {int(weighted)}"]
    for tag, g in (("A", ga), ("B", gb)):
        lines.append(tag)
        for e, (u, v) in enumerate(g.edges):
            if weighted:
                lines.append(f"{u} {v} {float(g.weights[e])!r}")
            else:
                lines.append(f"{u} {v}")
    if instance.ground_truth is not None:
        lines.append("PI")
        lines.extend(f"{i} {p}" for i, p in enumerate(instance.ground_truth))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pair(path):
    """Parse a pair file; errors carry the offending line number."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(k + 1, ln.split()) for k, ln in enumerate(raw)
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty file", 1)
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("unexpected end of file", len(raw) + 1)
        item = lines[pos]
        pos += 1
        return item

    lineno, head = take()
    if len(head) != 4:
        raise ParseError("header must be 'n m_a m_b weighted'", lineno)
    try:
        n, m_a, m_b, weighted = (int(x) for x in head)
    except ValueError:
        raise ParseError("header fields must be integers", lineno) from None
    if n < 0 or m_a < 0 or m_b < 0 or weighted not in (0, 1):
        raise ParseError("invalid header values", lineno)

    def block(tag, count):
        lineno, tok = take()
        if tok != [tag]:
            raise ParseError(f"expected block marker {tag!r}", lineno)
        edges, weights, seen = [], [], set()
        width = 3 if weighted else 2
        for _ in range(count):
            lineno, tok = take()
            if len(tok) != width:
                raise ParseError(f"expected {width} fields", lineno)
            try:
                u, v = int(tok[0]), int(tok[1])
                w = float(tok[2]) if weighted else None
            except ValueError:
                raise ParseError("malformed edge line", lineno) from None
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError("vertex out of range", lineno)
            if u == v:
                raise ParseError("self-loop", lineno)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ParseError(f"duplicate edge {key}", lineno)
            seen.add(key)
            edges.append((u, v))
            weights.append(w)
        return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2),
                     np.array(weights, dtype=np.float64) if weighted else None)

    ga = block("A", m_a)
    gb = block("B", m_b)
    perm = None
    if pos < len(lines):
        lineno, tok = take()
        if tok != ["PI"]:
            raise ParseError("expected block marker 'PI' or end of file", lineno)
        perm = np.full(n, -1, dtype=np.int64)
        for _ in range(n):
            lineno, tok = take()
            try:
                i, p = (int(x) for x in tok)
            except ValueError:
                raise ParseError("expected 'i pi(i)'", lineno) from None
            if not (0 <= i < n and 0 <= p < n) or perm[i] != -1:
                raise ParseError("invalid permutation entry", lineno)
            perm[i] = p
        if np.unique(perm).size != n:
            raise ParseError("PI block is not a permutation", lineno)
        if pos < len(lines):
            raise ParseError("trailing content", lines[pos][0])
    return GraphPairInstance(ga, gb, perm)
