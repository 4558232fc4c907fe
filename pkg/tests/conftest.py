from __future__ import annotations

import numpy as np
import pytest

from sesim.graphs import MultiRelGraph, RelationKind, WeightedGraph, build_multirel
from sesim.netgen import StarNetConfig, gen_star_network

# Two unit-weight triangles {0,1,2} and {3,4,5} bridged by the edge (2,3).
TWO_TRIANGLE_EDGES = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]

# Three unit-weight triangles bridged in a chain by (2,3) and (5,6).
THREE_CLIQUE_EDGES = [
    (0, 1), (0, 2), (1, 2),
    (3, 4), (3, 5), (4, 5),
    (6, 7), (6, 8), (7, 8),
    (2, 3), (5, 6),
]

STAR_MIX = {
    RelationKind.TWEET: 0.6,
    RelationKind.RETWEET: 0.2,
    RelationKind.MENTION: 0.1,
    RelationKind.REPLY: 0.1,
}


def unit_graph(n: int, edges) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(a, b, 1.0) for a, b in edges])


def unit_triples(edges):
    return [(a, b, 1.0) for a, b in edges]


@pytest.fixture
def two_triangle() -> WeightedGraph:
    return unit_graph(6, TWO_TRIANGLE_EDGES)


@pytest.fixture
def three_cliques() -> WeightedGraph:
    return unit_graph(9, THREE_CLIQUE_EDGES)


@pytest.fixture
def star_config() -> StarNetConfig:
    # 150-vertex star-community benchmark: 10 hubs, 14 leaves each.
    return StarNetConfig(
        communities=10,
        sizes=(15,) * 10,
        inter_edge_prob=0.35,
        mix=STAR_MIX,
        seed=7,
    )


@pytest.fixture
def star_graph(star_config) -> MultiRelGraph:
    return gen_star_network(star_config)


def random_weighted_graph(rng: np.random.Generator, n: int,
                          density: float = 0.35) -> WeightedGraph:
    """Seeded random directed graph with positive weights; may be disconnected."""
    triples = []
    for a in range(n):
        for b in range(n):
            if a != b and rng.random() < density:
                triples.append((a, b, float(rng.uniform(0.2, 3.0))))
    if not triples and n >= 2:
        triples.append((0, 1, 1.0))
    return WeightedGraph.from_edges(n, triples)


def random_multirel(rng: np.random.Generator, n: int, m: int) -> MultiRelGraph:
    events = []
    kinds = list(RelationKind)
    for i in range(m):
        a, b = rng.integers(0, n, size=2)
        while b == a:
            b = rng.integers(0, n)
        events.append((int(a), int(b), kinds[int(rng.integers(4))], int(i)))
    return build_multirel(events, n)
