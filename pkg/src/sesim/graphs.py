"""Multi-relational event graphs, structural feature vectors, and weighted projections.

A social trace is a list of timestamped directed events, one of four relation
kinds. Projection onto a single relation produces a weighted directed graph
whose edge weights come from a rank-correlation similarity of the endpoint
feature vectors. Entropy computations elsewhere use the symmetric view of that
graph (each directed edge contributes its weight to both endpoint degrees);
diffusion keeps the directed view.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ParseError

# Floor applied after mapping correlation w in [-1, 1] to (1 + w) / 2, so that
# projected edge weights stay strictly positive.
WEIGHT_FLOOR = 1e-6

_BASE_FEATURES = 11  # 4 relations x (out, in) + activity + earliest + latest


class RelationKind(enum.Enum):
    """Relation kinds of a social event; values are the wire codes."""

    TWEET = "TW"
    RETWEET = "RT"
    MENTION = "MT"
    REPLY = "RE"

    @classmethod
    def from_code(cls, code: str) -> "RelationKind":
        token = code.strip().upper()
        for kind in cls:
            if token in (kind.value, kind.name):
                return kind
        raise ParseError(f"unknown relation code {code!r}")


# (src, dst, relation, timestamp)
Event = tuple[int, int, RelationKind, int]


@dataclass(frozen=True, eq=False)
class MultiRelGraph:
    """Immutable multi-relational event graph with dense vertex ids 0..n-1.

    Edge arrays are per relation, shape (m_r, 3) int64 columns (src, dst, ts),
    deduplicated on (src, dst) and sorted by (src, dst) so construction is
    canonical: rebuilding from ``iter_events()`` reproduces the same graph.
    """

    n: int
    edges: Mapping[RelationKind, np.ndarray]
    dropped_self_loops: int = 0

    @property
    def m(self) -> int:
        return sum(arr.shape[0] for arr in self.edges.values())

    def edge_count(self, relation: RelationKind) -> int:
        return self.edges[relation].shape[0]

    def iter_events(self) -> Iterator[Event]:
        for kind in RelationKind:
            for src, dst, ts in self.edges[kind]:
                yield int(src), int(dst), kind, int(ts)

    def with_event(self, src: int, dst: int, relation: RelationKind, ts: int) -> "MultiRelGraph":
        """Return a graph with one extra event; no-op if the edge exists."""
        if not (0 <= src < self.n and 0 <= dst < self.n):
            raise ValueError(f"event endpoints ({src}, {dst}) out of range for n={self.n}")
        if src == dst:
            return self
        arr = self.edges[relation]
        if arr.shape[0] and bool(np.any((arr[:, 0] == src) & (arr[:, 1] == dst))):
            return self
        row = np.array([[src, dst, ts]], dtype=np.int64)
        merged = np.concatenate([arr, row])
        order = np.lexsort((merged[:, 1], merged[:, 0]))
        edges = dict(self.edges)
        edges[relation] = merged[order]
        return MultiRelGraph(self.n, edges, self.dropped_self_loops)

    def diffusion_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Directed edge union over all relations, deduplicated on (src, dst)."""
        if self.m == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        stacked = np.concatenate([arr[:, :2] for arr in self.edges.values()])
        keys = stacked[:, 0] * self.n + stacked[:, 1]
        uniq = np.unique(keys)
        return uniq // self.n, uniq % self.n

    def diffusion_view(self) -> "WeightedGraph":
        """Unit-weight directed graph used for cascade simulation."""
        src, dst = self.diffusion_edges()
        return WeightedGraph(self.n, src, dst, np.ones(src.shape[0]))


def build_multirel(events: Iterable[Event], n: int) -> MultiRelGraph:
    """Build a MultiRelGraph from raw events.

    Self-loops are dropped (counted in ``dropped_self_loops``); duplicate
    (src, dst) pairs within a relation collapse to one edge keeping the
    earliest timestamp. Endpoints outside 0..n-1 raise ValueError.
    """
    if n < 1:
        raise ValueError("vertex count must be >= 1")
    dropped = 0
    seen: dict[RelationKind, dict[tuple[int, int], int]] = {k: {} for k in RelationKind}
    for src, dst, relation, ts in events:
        src, dst, ts = int(src), int(dst), int(ts)
        if not (0 <= src < n and 0 <= dst < n):
            raise ValueError(f"event endpoints ({src}, {dst}) out of range for n={n}")
        if not isinstance(relation, RelationKind):
            raise ValueError(f"unknown relation {relation!r}")
        if src == dst:
            dropped += 1
            continue
        bucket = seen[relation]
        key = (src, dst)
        if key not in bucket or ts < bucket[key]:
            bucket[key] = ts
    edges = {}
    for kind in RelationKind:
        rows = sorted((s, d, t) for (s, d), t in seen[kind].items())
        edges[kind] = np.array(rows, dtype=np.int64).reshape(len(rows), 3)
    return MultiRelGraph(n, edges, dropped)


def structural_features(g: MultiRelGraph, d: int) -> np.ndarray:
    """Deterministic per-vertex feature matrix of shape (n, d).

    Base features are per-relation out/in degree counts, total activity count,
    and earliest/latest incident timestamp (0 for isolated vertices). The base
    vector is zero-padded to d when d >= 11, otherwise folded by summing base
    component i into output slot i mod d. Identical incident edge multisets
    give identical rows.
    """
    if d < 2:
        raise ValueError("feature dimension must be >= 2")
    base = np.zeros((g.n, _BASE_FEATURES))
    earliest = np.full(g.n, np.inf)
    latest = np.full(g.n, -np.inf)
    for ri, kind in enumerate(RelationKind):
        arr = g.edges[kind]
        if arr.shape[0] == 0:
            continue
        src, dst, ts = arr[:, 0], arr[:, 1], arr[:, 2]
        base[:, 2 * ri] += np.bincount(src, minlength=g.n)
        base[:, 2 * ri + 1] += np.bincount(dst, minlength=g.n)
        for ends in (src, dst):
            np.minimum.at(earliest, ends, ts)
            np.maximum.at(latest, ends, ts)
    base[:, 8] = base[:, :8].sum(axis=1)
    active = np.isfinite(earliest)
    base[active, 9] = earliest[active]
    base[active, 10] = latest[active]
    if d >= _BASE_FEATURES:
        out = np.zeros((g.n, d))
        out[:, :_BASE_FEATURES] = base
    else:
        out = np.zeros((g.n, d))
        for i in range(_BASE_FEATURES):
            out[:, i % d] += base[:, i]
    return out


def load_features(path, n: int) -> np.ndarray:
    """Read a feature override table: CSV rows of vertex id + d reals.

    Every vertex 0..n-1 must appear exactly once and all rows must share one
    dimension d >= 2 of finite values.
    """
    rows: dict[int, list[float]] = {}
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            try:
                vid = int(parts[0])
                vals = [float(p) for p in parts[1:]]
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: malformed feature row") from exc
            if len(vals) < 2:
                raise ParseError(f"{path}:{lineno}: feature dimension must be >= 2")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"{path}:{lineno}: inconsistent feature dimension")
            if not all(np.isfinite(vals)):
                raise ParseError(f"{path}:{lineno}: non-finite feature value")
            if not 0 <= vid < n:
                raise ParseError(f"{path}:{lineno}: vertex id {vid} out of range")
            if vid in rows:
                raise ParseError(f"{path}:{lineno}: duplicate vertex id {vid}")
            rows[vid] = vals
    if len(rows) != n:
        raise ParseError(f"{path}: expected {n} feature rows, found {len(rows)}")
    return np.array([rows[v] for v in range(n)])


def spearman_weight(h_i: Sequence[float], h_j: Sequence[float]) -> float:
    """Rank-correlation similarity of two feature vectors, in [-1, 1].

    Components are ranked within each vector (ties get average ranks) and the
    squared rank-difference form is applied: 1 - 6*||r_i - r_j||^2 / (d(d^2-1)).
    """
    a = np.asarray(h_i, dtype=float)
    b = np.asarray(h_j, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError("feature vectors must be 1-D and of equal length")
    d = a.shape[0]
    if d < 2:
        raise ValueError("feature dimension must be >= 2")
    ra = rankdata(a)
    rb = rankdata(b)
    return float(1.0 - 6.0 * np.sum((ra - rb) ** 2) / (d * (d * d - 1.0)))


def positivize_weight(w) -> np.ndarray | float:
    """Map a correlation in [-1, 1] to a strictly positive edge weight."""
    out = np.maximum((1.0 + np.asarray(w, dtype=float)) / 2.0, WEIGHT_FLOOR)
    return float(out) if out.ndim == 0 else out


class WeightedGraph:
    """Directed weighted graph over a fixed vertex set 0..n-1.

    Degrees and volume use the symmetric view: each directed edge adds its
    weight to both endpoint degrees (anti-parallel edges sum). The directed
    edge arrays are kept for diffusion. Instances are immutable.
    """

    __slots__ = (
        "n", "src", "dst", "weight", "degree", "volume",
        "sym_u", "sym_v", "sym_w",
        "_adj_indptr", "_adj_nbr", "_adj_wt", "_out_indptr", "_out_order",
    )

    def __init__(self, n: int, src, dst, weight):
        if n < 1:
            raise ValueError("vertex count must be >= 1")
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        weight = np.asarray(weight, dtype=float).ravel()
        if not (src.shape == dst.shape == weight.shape):
            raise ValueError("edge arrays must have equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise ValueError("edge endpoint out of range")
            if bool(np.any(src == dst)):
                raise ValueError("self-loops are not allowed")
            if not np.all(np.isfinite(weight)) or bool(np.any(weight <= 0)):
                raise ValueError("edge weights must be finite and > 0")
        self.n = n
        self.src, self.dst, self.weight = src, dst, weight
        degree = np.zeros(n)
        np.add.at(degree, src, weight)
        np.add.at(degree, dst, weight)
        self.degree = degree
        self.volume = float(degree.sum())

        # Merged symmetric edge list (u < v), anti-parallel weights summed.
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        keys = lo * n + hi
        uniq, inverse = np.unique(keys, return_inverse=True)
        sym_w = np.zeros(uniq.shape[0])
        np.add.at(sym_w, inverse, weight)
        self.sym_u = uniq // n
        self.sym_v = uniq % n
        self.sym_w = sym_w

        # Symmetric adjacency in CSR form (each undirected edge in both rows).
        rows = np.concatenate([self.sym_u, self.sym_v])
        cols = np.concatenate([self.sym_v, self.sym_u])
        wts = np.concatenate([sym_w, sym_w])
        order = np.argsort(rows, kind="stable")
        self._adj_nbr = cols[order]
        self._adj_wt = wts[order]
        counts = np.bincount(rows, minlength=n)
        self._adj_indptr = np.concatenate([[0], np.cumsum(counts)])

        # Directed out-edge index lists for cascade traversal.
        out_order = np.argsort(src, kind="stable")
        self._out_order = out_order
        out_counts = np.bincount(src, minlength=n) if src.size else np.zeros(n, dtype=np.int64)
        self._out_indptr = np.concatenate([[0], np.cumsum(out_counts)])

    @classmethod
    def from_edges(cls, n: int, triples: Iterable[tuple[int, int, float]]) -> "WeightedGraph":
        rows = list(triples)
        src = [r[0] for r in rows]
        dst = [r[1] for r in rows]
        w = [r[2] for r in rows]
        return cls(n, src, dst, w)

    @property
    def m(self) -> int:
        return self.src.shape[0]

    @property
    def is_degenerate(self) -> bool:
        return self.volume <= 0.0

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric-view neighbors of v with merged weights."""
        lo, hi = self._adj_indptr[v], self._adj_indptr[v + 1]
        return self._adj_nbr[lo:hi], self._adj_wt[lo:hi]

    def out_edge_indices(self, v: int) -> np.ndarray:
        lo, hi = self._out_indptr[v], self._out_indptr[v + 1]
        return self._out_order[lo:hi]

    def out_degree_counts(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n) if self.m else np.zeros(self.n, dtype=np.int64)

    def volume_of(self, vertices) -> float:
        idx = np.fromiter(vertices, dtype=np.int64) if not isinstance(vertices, np.ndarray) else vertices
        return float(self.degree[idx].sum()) if idx.size else 0.0

    def cut_of(self, vertices) -> float:
        """Total symmetric weight crossing the boundary of a vertex set."""
        mask = np.zeros(self.n, dtype=bool)
        mask[list(vertices)] = True
        crossing = mask[self.sym_u] ^ mask[self.sym_v]
        return float(self.sym_w[crossing].sum())

    def without_vertices(self, removed) -> "WeightedGraph":
        """Same vertex set with all edges incident to ``removed`` deleted."""
        mask = np.zeros(self.n, dtype=bool)
        mask[list(removed)] = True
        keep = ~(mask[self.src] | mask[self.dst])
        return WeightedGraph(self.n, self.src[keep], self.dst[keep], self.weight[keep])


def project(g: MultiRelGraph, relation: RelationKind, features: np.ndarray) -> WeightedGraph:
    """Project one relation to a weighted directed graph.

    Edge weight = positivized rank correlation of the endpoint feature rows.
    Vertices without edges of this relation remain isolated; the vertex count
    is preserved.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] != g.n:
        raise ValueError(f"feature matrix must have shape ({g.n}, d)")
    if features.shape[1] < 2:
        raise ValueError("feature dimension must be >= 2")
    if not np.all(np.isfinite(features)):
        raise ValueError("feature matrix must be finite")
    arr = g.edges[relation]
    if arr.shape[0] == 0:
        return WeightedGraph(g.n, [], [], [])
    d = features.shape[1]
    ranks = rankdata(features, axis=1)
    diff = ranks[arr[:, 0]] - ranks[arr[:, 1]]
    rho = 1.0 - 6.0 * np.sum(diff * diff, axis=1) / (d * (d * d - 1.0))
    return WeightedGraph(g.n, arr[:, 0], arr[:, 1], positivize_weight(rho))
