"""Follower selection: conditional-entropy policy and influence-max baselines.

The conditional entropy of a candidate u given a reference vertex b is the
sum of entropy terms along u's leaf-to-root path, stopping below the lowest
common ancestor of the two leaves. Normalizing those scores over a candidate
set yields the selection distribution. CELF (lazy greedy under common random
numbers) and out-degree ranking serve as classical baselines.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .entropy import EncodingTree
from .graphs import WeightedGraph
from .influence import DiffusionConfig, SpreadEstimator


def conditional_se(tree: EncodingTree, u: int, b: int) -> float:
    """Path entropy of vertex u below its lowest common ancestor with b.

    Zero when u == b. Strictly positive exactly when some node on that path
    carries a positive entropy term.
    """
    n = tree.graph.n
    if not (0 <= u < n and 0 <= b < n):
        raise ValueError("vertex id out of range")
    if u == b:
        return 0.0
    depths = tree.depths()
    a, c = u, b
    while depths[a] > depths[c]:
        a = tree.nodes[a].parent
    while depths[c] > depths[a]:
        c = tree.nodes[c].parent
    while a != c:
        a = tree.nodes[a].parent
        c = tree.nodes[c].parent
    lca = a
    total = 0.0
    nid = u
    while nid != lca:
        total += tree.assigned_entropy(nid)
        nid = tree.nodes[nid].parent
    return total


@dataclass(frozen=True)
class SelectionDistribution:
    """Normalized selection probabilities over an explicit candidate list."""

    candidates: np.ndarray
    scores: np.ndarray
    probs: np.ndarray


def selection_distribution(tree: EncodingTree, bot: int, candidates) -> SelectionDistribution:
    """Normalize conditional entropies of the candidates into probabilities.

    Candidates must be non-empty, unique, and exclude the bot (callers are
    responsible for also excluding current followers). An all-zero score
    vector falls back to the uniform distribution.
    """
    cand = np.asarray(sorted(int(c) for c in candidates), dtype=np.int64)
    if cand.size == 0:
        raise ValueError("candidate set must be non-empty")
    if np.unique(cand).size != cand.size:
        raise ValueError("candidate ids must be unique")
    if bot in cand:
        raise ValueError("the bot cannot be its own candidate")
    scores = np.array([conditional_se(tree, int(u), bot) for u in cand])
    total = scores.sum()
    if total > 0.0:
        probs = scores / total
    else:
        probs = np.full(cand.size, 1.0 / cand.size)
    return SelectionDistribution(cand, scores, probs)


def select_follower(dist: SelectionDistribution, mode: str = "sample", rng=None) -> int:
    """Pick one candidate: seeded sampling or argmax (ties to smallest id)."""
    if mode == "argmax":
        best = dist.probs.max()
        return int(dist.candidates[dist.probs >= best].min())
    if mode == "sample":
        if rng is None:
            raise ValueError("sampling requires an RNG")
        if isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(int(rng))
        idx = rng.choice(dist.candidates.size, p=dist.probs)
        return int(dist.candidates[idx])
    raise ValueError(f"unknown selection mode {mode!r}")


def celf_select(g: WeightedGraph, k: int, cfg: DiffusionConfig) -> list[int]:
    """Lazy-greedy seed selection of k vertices maximizing estimated spread.

    Marginal gains are evaluated on one shared set of live-edge draws, which
    keeps the estimated objective submodular, so the lazy queue reproduces
    naive greedy exactly (ties break to the smallest vertex id). Gains are
    compared as integer trial totals to keep ties exact.
    """
    if not 1 <= k <= g.n:
        raise ValueError(f"budget k={k} out of range 1..{g.n}")
    est = SpreadEstimator.for_graph(g, cfg)
    chosen: list[int] = []
    current_total = 0
    # Queue entries: (-gain_total, vertex, size of chosen when evaluated).
    queue = [(-est.total_reach([v]), v, 0) for v in range(g.n)]
    heapq.heapify(queue)
    while len(chosen) < k:
        neg_gain, v, at = heapq.heappop(queue)
        if at == len(chosen):
            chosen.append(v)
            current_total += -neg_gain
        else:
            gain = est.total_reach(chosen + [v]) - current_total
            heapq.heappush(queue, (-gain, v, len(chosen)))
    return chosen


def degree_select(g: WeightedGraph, k: int) -> list[int]:
    """Top-k vertices by directed out-edge count, ties to the smaller id."""
    if not 0 <= k <= g.n:
        raise ValueError(f"budget k={k} out of range 0..{g.n}")
    counts = g.out_degree_counts()
    order = np.lexsort((np.arange(g.n), -counts))
    return [int(v) for v in order[:k]]
