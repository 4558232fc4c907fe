"""Entropy-based influence, tree pruning, and independent-cascade spread.

A tree node's influence is the sum of entropy terms along its path to the
root (root excluded), so deeper nodes dominate their ancestors. Pruning drops
the lowest-influence height-1 subtrees under a vertex budget. Spread of a
seed set follows the independent cascade model: every newly activated vertex
gets one chance per outgoing edge to activate its head with probability p
(edge weights play no role in diffusion).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .entropy import EncodingTree
from .graphs import WeightedGraph


def community_influence(tree: EncodingTree) -> dict[int, float]:
    """Influence of every non-root node: path sum of entropy terms up to the root."""
    out: dict[int, float] = {}
    stack = [(tree.root, 0.0)]
    while stack:
        nid, acc = stack.pop()
        for c in tree.nodes[nid].children:
            val = acc + tree.assigned_entropy(c)
            out[c] = val
            if not tree.nodes[c].is_leaf:
                stack.append((c, val))
    return out


class PruneResult(NamedTuple):
    tree: EncodingTree
    graph: WeightedGraph
    removed: set[int]


def prune(
    tree: EncodingTree,
    graph: WeightedGraph,
    ratio: float,
    protected: Iterable[int] = (),
) -> PruneResult:
    """Remove low-influence height-1 subtrees, at most ratio * n vertices total.

    Candidates are non-root interior nodes whose children are all leaves,
    scanned in ascending (influence, id) order; a subtree is skipped when it
    contains a protected vertex or would push the cumulative removed count
    past the budget. Removal deletes all edges incident to the removed
    vertices; the vertices themselves keep their ids as isolated leaves
    re-hung under the root, and all caches are recomputed, so tree invariants
    keep holding against the returned graph.
    """
    if not 0.0 <= ratio < 1.0:
        raise ValueError("prune ratio must lie in [0, 1)")
    protected = set(protected)
    infl = community_influence(tree)
    candidates = []
    for nid, node in tree.nodes.items():
        if nid == tree.root or node.is_leaf:
            continue
        if all(tree.nodes[c].is_leaf for c in node.children):
            candidates.append((infl[nid], nid))
    candidates.sort()

    budget = ratio * graph.n
    removed: set[int] = set()
    doomed: list[int] = []
    for _, nid in candidates:
        verts = tree.vertices_of(nid)
        if protected.intersection(verts):
            continue
        if len(removed) + len(verts) > budget + 1e-9:
            continue
        removed.update(verts)
        doomed.append(nid)
    if not removed:
        return PruneResult(tree, graph, removed)

    new_graph = graph.without_vertices(removed)
    new_tree = tree.copy()
    new_tree.graph = new_graph
    root = new_tree.nodes[new_tree.root]
    for nid in doomed:
        node = new_tree.nodes.pop(nid)
        parent = new_tree.nodes[node.parent]
        parent.children.remove(nid)
        for leaf in node.children:
            new_tree.nodes[leaf].parent = new_tree.root
            root.children.append(leaf)
        # Ancestors emptied of all children collapse upward.
        while parent.id != new_tree.root and not parent.children:
            grand = new_tree.nodes[parent.parent]
            grand.children.remove(parent.id)
            del new_tree.nodes[parent.id]
            parent = grand
    root.children.sort()
    new_tree.recompute_caches()
    return PruneResult(new_tree, new_graph, removed)


def write_influence_report(path, tree: EncodingTree, pruned_nodes: Iterable[int] = ()) -> None:
    """CSV report: node_id, size, I_alpha, pruned for every non-root node."""
    pruned = set(pruned_nodes)
    infl = community_influence(tree)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node_id", "size", "I_alpha", "pruned"])
        for nid in sorted(infl):
            size = len(tree.vertices_of(nid))
            writer.writerow([nid, size, f"{infl[nid]:.9g}", str(nid in pruned).lower()])


@dataclass(frozen=True)
class DiffusionConfig:
    """Cascade parameters: activation probability, trial count, base seed."""

    p: float
    trials: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("activation probability must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")


class SpreadEstimate(NamedTuple):
    mean: float
    stderr: float


def _trial_uniforms(cfg: DiffusionConfig, m: int) -> np.ndarray:
    """Per-trial edge uniforms, row t being trial t's stream.

    Drawn in one pass from the seed-keyed generator, so trial t's coins are a
    pure function of (seed, t) and any evaluation order (or parallel split)
    reproduces them bit-identically.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    return rng.random((cfg.trials, m))


def _reach_count(out_edges: list[np.ndarray], dst: np.ndarray, live: np.ndarray,
                 seeds: list[int], reached: np.ndarray) -> int:
    """BFS over live edges from seeds; marks ``reached`` in place."""
    stack = []
    count = 0
    for s in seeds:
        if not reached[s]:
            reached[s] = True
            stack.append(s)
            count += 1
    while stack:
        v = stack.pop()
        for ei in out_edges[v]:
            if live[ei]:
                head = dst[ei]
                if not reached[head]:
                    reached[head] = True
                    stack.append(head)
                    count += 1
    return count


def icm_simulate(g: WeightedGraph, seeds: Iterable[int], cfg: DiffusionConfig) -> SpreadEstimate:
    """Monte Carlo independent-cascade spread of a seed set.

    Returns the mean reached-vertex count (seeds included) and its standard
    error over trials. Each trial draws one uniform per directed edge up
    front and walks the live subgraph, which is distribution-identical to
    flipping a coin the moment an edge's tail activates and makes the outcome
    pathwise monotone in p and in the seed set.
    """
    seed_list = sorted(set(int(s) for s in seeds))
    if not seed_list:
        raise ValueError("seed set must be non-empty")
    if seed_list[0] < 0 or seed_list[-1] >= g.n:
        raise ValueError("seed vertex out of range")
    out_edges = [g.out_edge_indices(v) for v in range(g.n)]
    dst = g.dst
    counts = np.empty(cfg.trials, dtype=np.int64)
    reached = np.zeros(g.n, dtype=bool)
    # Sequential row blocks of one generator reproduce the single-pass
    # (trials, m) draw exactly, so chunking only bounds memory.
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    rows_per_block = max(1, 4_000_000 // max(1, g.m))
    t = 0
    while t < cfg.trials:
        take = min(rows_per_block, cfg.trials - t)
        uniforms = rng.random((take, g.m))
        for r in range(take):
            live = uniforms[r] < cfg.p
            reached[:] = False
            counts[t + r] = _reach_count(out_edges, dst, live, seed_list, reached)
        t += take
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / np.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0
    return SpreadEstimate(mean, stderr)


def influence_ratio(spread: float, n: int) -> float:
    """Fraction of the network reached: spread / n."""
    if n < 1:
        raise ValueError("vertex count must be >= 1")
    if spread < 0 or spread > n + 1e-9:
        raise ValueError("spread must lie in [0, n]")
    return float(spread) / n


class SpreadEstimator:
    """Common-random-numbers cascade evaluator over a fixed directed edge set.

    One live-edge draw per trial is shared across every seed-set evaluation,
    so marginal gains are exactly comparable (and the per-trial reach is a
    coverage function, hence submodular, which lazy greedy selection relies
    on). Totals are integer trial sums; divide by ``trials`` for means.
    """

    def __init__(self, n: int, src: np.ndarray, dst: np.ndarray, cfg: DiffusionConfig):
        self.n = n
        self.cfg = cfg
        self.dst = np.asarray(dst, dtype=np.int64)
        src = np.asarray(src, dtype=np.int64)
        m = src.shape[0]
        order = np.argsort(src, kind="stable")
        counts = np.bincount(src, minlength=n) if m else np.zeros(n, dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        self._out_edges = [order[indptr[v]:indptr[v + 1]] for v in range(n)]
        self._live = _trial_uniforms(cfg, m) < cfg.p if m else np.zeros((cfg.trials, 0), dtype=bool)

    @classmethod
    def for_graph(cls, g: WeightedGraph, cfg: DiffusionConfig) -> "SpreadEstimator":
        return cls(g.n, g.src, g.dst, cfg)

    def trial_counts(self, seeds: Iterable[int]) -> np.ndarray:
        seed_list = sorted(set(int(s) for s in seeds))
        if not seed_list:
            raise ValueError("seed set must be non-empty")
        counts = np.empty(self.cfg.trials, dtype=np.int64)
        reached = np.zeros(self.n, dtype=bool)
        for t in range(self.cfg.trials):
            reached[:] = False
            counts[t] = _reach_count(self._out_edges, self.dst, self._live[t], seed_list, reached)
        return counts

    def total_reach(self, seeds: Iterable[int]) -> int:
        """Integer sum of reached counts over all trials (exact arithmetic)."""
        return int(self.trial_counts(seeds).sum())

    def estimate(self, seeds: Iterable[int]) -> SpreadEstimate:
        counts = self.trial_counts(seeds)
        mean = float(counts.mean())
        stderr = float(counts.std(ddof=1) / np.sqrt(self.cfg.trials)) if self.cfg.trials > 1 else 0.0
        return SpreadEstimate(mean, stderr)
