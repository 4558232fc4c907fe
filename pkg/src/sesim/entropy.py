"""Encoding trees and structural entropy of weighted graphs (symmetric view).

An encoding tree is a rooted hierarchy whose leaves biject with the graph
vertices; every interior node represents the set of vertices below it. Each
non-root node alpha carries an entropy term -(g/vol) * log2(V_a / V_parent)
where V_a is the volume of alpha's vertex set and g the weight crossing its
boundary. The tree entropy is the sum of those terms, and the one-layer tree
reproduces the degree-distribution entropy exactly.

Optimization grows the tree under a height bound K by greedy layer stretching
(agglomerating sibling groups under fresh intermediate nodes while the merge
strictly decreases tree entropy) followed by a compress pass (deleting an
intermediate child when that strictly decreases entropy). Both operators are
entropy-monotone by construction; every accepted application is logged with
its positive delta when an audit list is supplied.
"""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGraphWarning, InvariantError, ParseError
from .graphs import WeightedGraph

# Strict-decrease threshold: deltas at or below this are treated as zero so
# numerical noise never drives an "improvement".
EPS = 1e-12


def _term(vol: float, g: float, v_node: float, v_parent: float) -> float:
    """Entropy term of a node given its cut, volume and parent volume."""
    if vol <= 0.0 or g <= 0.0 or v_node <= 0.0 or v_node >= v_parent:
        return 0.0
    return -(g / vol) * math.log2(v_node / v_parent)


def one_dim_entropy(g: WeightedGraph) -> float:
    """Degree-distribution entropy -sum_v (d_v/vol) log2(d_v/vol).

    Zero-degree vertices contribute nothing. A zero-volume graph yields 0.0
    and a DegenerateGraphWarning.
    """
    if g.is_degenerate:
        warnings.warn("graph has zero volume", DegenerateGraphWarning, stacklevel=2)
        return 0.0
    d = g.degree[g.degree > 0]
    frac = d / g.volume
    return float(-(frac * np.log2(frac)).sum())


@dataclass
class TreeNode:
    id: int
    parent: int | None
    children: list[int] = field(default_factory=list)
    vertex: int | None = None  # set for leaves only
    volume: float = 0.0
    cut: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.vertex is not None


class EncodingTree:
    """Mutable encoding tree over a fixed WeightedGraph.

    Leaf ids equal their vertex ids; the root id is n. Children lists are kept
    sorted so all traversals are deterministic.
    """

    def __init__(self, graph: WeightedGraph, nodes: dict[int, TreeNode], root: int, next_id: int):
        self.graph = graph
        self.nodes = nodes
        self.root = root
        self._next_id = next_id

    @classmethod
    def one_layer(cls, graph: WeightedGraph) -> "EncodingTree":
        """Trivial tree: every vertex a leaf directly under the root."""
        nodes = {}
        n = graph.n
        for v in range(n):
            d = float(graph.degree[v])
            nodes[v] = TreeNode(id=v, parent=n, vertex=v, volume=d, cut=d)
        nodes[n] = TreeNode(id=n, parent=None, children=list(range(n)), volume=graph.volume, cut=0.0)
        return cls(graph, nodes, root=n, next_id=n + 1)

    # ---- structure queries -------------------------------------------------

    def depths(self) -> dict[int, int]:
        out = {self.root: 0}
        stack = [self.root]
        while stack:
            nid = stack.pop()
            d = out[nid] + 1
            for c in self.nodes[nid].children:
                out[c] = d
                stack.append(c)
        return out

    @property
    def height(self) -> int:
        depths = self.depths()
        return max(depths[nid] for nid, node in self.nodes.items() if node.is_leaf)

    def vertices_of(self, nid: int) -> list[int]:
        out = []
        stack = [nid]
        while stack:
            node = self.nodes[stack.pop()]
            if node.is_leaf:
                out.append(node.vertex)
            else:
                stack.extend(node.children)
        return out

    def layer_nodes(self, layer: int, include_leaves: bool = False) -> list[int]:
        depths = self.depths()
        ids = [
            nid for nid, d in depths.items()
            if d == layer and (include_leaves or not self.nodes[nid].is_leaf)
        ]
        return sorted(ids)

    # ---- entropy -----------------------------------------------------------

    def assigned_entropy(self, nid: int) -> float:
        """Entropy term of one non-root node."""
        node = self.nodes[nid]
        if node.parent is None:
            raise ValueError("the root carries no entropy term")
        parent = self.nodes[node.parent]
        return _term(self.graph.volume, node.cut, node.volume, parent.volume)

    def tree_entropy(self) -> float:
        total = 0.0
        for nid, node in self.nodes.items():
            if node.parent is not None:
                total += _term(self.graph.volume, node.cut, node.volume,
                               self.nodes[node.parent].volume)
        return total

    # ---- operators ---------------------------------------------------------

    def stretch(self, alpha: int, audit: list | None = None, debug: bool = False) -> float:
        """Insert one intermediate layer beneath alpha by greedy agglomeration.

        Phase 1 builds a pair-merge dendrogram over alpha's children: pairs
        are ranked by cross-weight density cut(X,Y)/(V_X V_Y), and a merge
        executes only when combining the pair under a fresh intermediate node
        strictly decreases tree entropy, i.e. (2 cut/vol) log2(V_alpha/(V_X+V_Y))
        is positive. Ranking by the raw decrease lets high-degree bridge ends
        swallow each other before their own communities form; density ranking
        avoids that while every executed merge still strictly decreases
        entropy. Phase 2 materializes the entropy-minimal horizontal cut of
        the dendrogram as the new layer (keeping the whole dendrogram would
        add more than one layer). Zero-volume children never participate.
        Returns the realized entropy decrease (0.0, tree unchanged, when no
        grouping helps).
        """
        node = self.nodes[alpha]
        if node.is_leaf:
            raise ValueError("stretch target must be a non-leaf node")
        vol = self.graph.volume
        mergeable = [c for c in node.children if self.nodes[c].volume > 0.0]
        if vol <= 0.0 or len(mergeable) < 2:
            return 0.0
        before = self.tree_entropy() if debug else 0.0
        v_alpha = node.volume

        # Dendrogram arena: entries 0..len(mergeable)-1 wrap the children,
        # merge entries follow. Active roots are keyed by the smallest
        # original child id on their side.
        d_left: list[int] = []
        d_right: list[int] = []
        d_vol: list[float] = []
        d_cut: list[float] = []
        d_child: list[int] = []
        idx: dict[int, int] = {}
        gvol: dict[int, float] = {}
        gcut: dict[int, float] = {}
        for c in mergeable:
            idx[c] = len(d_vol)
            d_left.append(-1)
            d_right.append(-1)
            d_vol.append(self.nodes[c].volume)
            d_cut.append(self.nodes[c].cut)
            d_child.append(c)
            gvol[c] = self.nodes[c].volume
            gcut[c] = self.nodes[c].cut
        version = {c: 0 for c in mergeable}

        vmap: dict[int, int] = {}
        for c in mergeable:
            for v in self.vertices_of(c):
                vmap[v] = c
        cuts: dict[int, dict[int, float]] = {c: {} for c in mergeable}
        g = self.graph
        for u, v, w in zip(g.sym_u, g.sym_v, g.sym_w):
            a = vmap.get(int(u))
            b = vmap.get(int(v))
            if a is None or b is None or a == b:
                continue
            cuts[a][b] = cuts[a].get(b, 0.0) + float(w)
            cuts[b][a] = cuts[b].get(a, 0.0) + float(w)

        def merge_score(a: int, b: int) -> float:
            cut_ab = cuts[a].get(b, 0.0)
            vz = gvol[a] + gvol[b]
            if cut_ab <= 0.0 or vz <= 0.0 or vz >= v_alpha:
                return 0.0
            return (2.0 * cut_ab / vol) * math.log2(v_alpha / vz)

        def pair_rank(a: int, b: int) -> float:
            # Heap priority only; merge_score gates execution.
            return cuts[a].get(b, 0.0) / (gvol[a] * gvol[b])

        heap: list[tuple[float, int, int, int, int]] = []
        for a in mergeable:
            for b in cuts[a]:
                if a < b:
                    heapq.heappush(heap, (-pair_rank(a, b), a, b, 0, 0))

        merged_any = False
        while heap:
            neg, a, b, va, vb = heapq.heappop(heap)
            if a not in idx or b not in idx:
                continue
            if version[a] != va or version[b] != vb:
                continue
            if merge_score(a, b) <= EPS:
                continue
            keep, drop = (a, b) if a < b else (b, a)
            cut_ab = cuts[keep].get(drop, 0.0)
            new_i = len(d_vol)
            d_left.append(idx[keep])
            d_right.append(idx[drop])
            d_vol.append(gvol[keep] + gvol[drop])
            d_cut.append(gcut[keep] + gcut[drop] - 2.0 * cut_ab)
            d_child.append(-1)
            idx[keep] = new_i
            gvol[keep] = d_vol[new_i]
            gcut[keep] = d_cut[new_i]
            version[keep] += 1
            touched = set(cuts[keep]) | set(cuts[drop])
            touched.discard(keep)
            touched.discard(drop)
            cut_row = {}
            for w_key in touched:
                cw = cuts[keep].get(w_key, 0.0) + cuts[drop].get(w_key, 0.0)
                cut_row[w_key] = cw
                cuts[w_key].pop(drop, None)
                cuts[w_key][keep] = cw
            cuts[keep] = cut_row
            del cuts[drop], gvol[drop], gcut[drop], idx[drop], version[drop]
            for w_key, cw in cut_row.items():
                if cw > 0.0:
                    lo, hi = (keep, w_key) if keep < w_key else (w_key, keep)
                    heapq.heappush(
                        heap, (-pair_rank(lo, hi), lo, hi, version[lo], version[hi])
                    )
            merged_any = True

        if not merged_any:
            return 0.0

        # Minimal one-layer cost over dendrogram cuts. For entry i:
        # keep = own term under alpha + member terms under the group;
        # split = best of the two sides. Entries are created bottom-up, so a
        # forward pass suffices. gsum/wsum accumulate member-term pieces:
        # sum over members X of (g_X/vol) log2(V/v_X) = (gsum/vol) log2 V - wsum.
        count = len(d_vol)
        gsum = [0.0] * count
        wsum = [0.0] * count
        t_alpha = [0.0] * count  # members' terms if left directly under alpha
        cost = [0.0] * count
        keep_flag = [False] * count
        min_cid = [0] * count
        for i in range(count):
            if d_child[i] >= 0:
                c = d_child[i]
                g0, v0 = self.nodes[c].cut, self.nodes[c].volume
                term = _term(vol, g0, v0, v_alpha)
                cost[i] = t_alpha[i] = term
                min_cid[i] = c
                if g0 > 0.0 and v0 > 0.0:
                    gsum[i] = g0
                    wsum[i] = (g0 / vol) * math.log2(v0)
            else:
                left, right = d_left[i], d_right[i]
                gsum[i] = gsum[left] + gsum[right]
                wsum[i] = wsum[left] + wsum[right]
                t_alpha[i] = t_alpha[left] + t_alpha[right]
                min_cid[i] = min(min_cid[left], min_cid[right])
                member_terms = (gsum[i] / vol) * math.log2(d_vol[i]) - wsum[i]
                cost_keep = _term(vol, d_cut[i], d_vol[i], v_alpha) + member_terms
                cost_split = cost[left] + cost[right]
                if cost_keep < cost_split:
                    cost[i] = cost_keep
                    keep_flag[i] = True
                else:
                    cost[i] = cost_split

        groups: list[int] = []
        stack = [idx[k] for k in idx]
        while stack:
            i = stack.pop()
            if keep_flag[i]:
                groups.append(i)
            elif d_child[i] < 0:
                stack.append(d_left[i])
                stack.append(d_right[i])
        if not groups:
            return 0.0
        total = sum(t_alpha[i] - cost[i] for i in groups)
        if total <= 0.0:
            return 0.0

        grouped: set[int] = set()
        new_nodes: list[tuple[int, list[int], float]] = []
        for i in sorted(groups, key=lambda j: min_cid[j]):
            members: list[int] = []
            walk = [i]
            while walk:
                j = walk.pop()
                if d_child[j] >= 0:
                    members.append(d_child[j])
                else:
                    walk.append(d_left[j])
                    walk.append(d_right[j])
            grouped.update(members)
            new_nodes.append((i, sorted(members), d_vol[i]))

        new_children = [c for c in node.children if c not in grouped]
        for i, members, v_s in new_nodes:
            nid = self._next_id
            self._next_id += 1
            verts: list[int] = []
            for c in members:
                verts.extend(self.vertices_of(c))
            self.nodes[nid] = TreeNode(
                id=nid, parent=alpha, children=members,
                volume=v_s, cut=self.graph.cut_of(verts),
            )
            for c in members:
                self.nodes[c].parent = nid
            new_children.append(nid)
        node.children = sorted(new_children)
        if audit is not None:
            audit.append({"op": "stretch", "node": alpha, "delta": total})

        if debug:
            after = self.tree_entropy()
            if abs((before - after) - total) > 1e-9 * max(1.0, abs(before)):
                raise InvariantError(
                    f"stretch delta mismatch: local {total}, recomputed {before - after}"
                )
        return total

    def compress(self, alpha: int, audit: list | None = None, debug: bool = False) -> float:
        """Delete interior children of alpha while deletion strictly decreases entropy.

        Removing a child beta reattaches beta's children to alpha; the local
        entropy change is ((g_beta - sum_c g_c)/vol) * log2(V_alpha/V_beta).
        Candidates are scanned in ascending id order so ties resolve to the
        smallest id. Returns the total decrease (0.0 when no deletion helps,
        which is the typical case for stretch-produced subtrees).
        """
        node = self.nodes[alpha]
        if node.is_leaf:
            raise ValueError("compress target must be a non-leaf node")
        vol = self.graph.volume
        if vol <= 0.0:
            return 0.0
        before = self.tree_entropy() if debug else 0.0
        total = 0.0
        while True:
            best_dec, best_c = EPS, None
            for c in node.children:
                cn = self.nodes[c]
                if cn.is_leaf or cn.volume <= 0.0 or cn.volume >= node.volume:
                    continue
                child_cut_sum = sum(self.nodes[cc].cut for cc in cn.children)
                dec = ((cn.cut - child_cut_sum) / vol) * math.log2(node.volume / cn.volume)
                if dec > best_dec:
                    best_dec, best_c = dec, c
            if best_c is None:
                break
            beta = self.nodes.pop(best_c)
            for c in beta.children:
                self.nodes[c].parent = alpha
            node.children = sorted([c for c in node.children if c != best_c] + beta.children)
            total += best_dec
            if audit is not None:
                audit.append({"op": "compress", "node": alpha, "delta": best_dec})
        if debug and total > 0.0:
            after = self.tree_entropy()
            if abs((before - after) - total) > 1e-9 * max(1.0, abs(before)):
                raise InvariantError(
                    f"compress delta mismatch: local {total}, recomputed {before - after}"
                )
        return total

    def avg_layer_reduction(self, layer: int) -> float:
        """Mean trial stretch-then-compress entropy reduction over layer ``layer``.

        Trials run on scratch copies; the tree is left unchanged. Layers with
        no non-leaf node yield 0.0; an out-of-range layer raises ValueError.
        """
        h = self.height
        if layer < 0 or layer > h:
            raise ValueError(f"layer {layer} out of range (tree height {h})")
        targets = self.layer_nodes(layer)
        if not targets:
            return 0.0
        total = 0.0
        for nid in targets:
            scratch = self.copy()
            total += scratch.stretch(nid) + scratch.compress(nid)
        return total / len(targets)

    # ---- maintenance -------------------------------------------------------

    def copy(self) -> "EncodingTree":
        nodes = {
            nid: TreeNode(
                id=n.id, parent=n.parent, children=list(n.children),
                vertex=n.vertex, volume=n.volume, cut=n.cut,
            )
            for nid, n in self.nodes.items()
        }
        return EncodingTree(self.graph, nodes, self.root, self._next_id)

    def recompute_caches(self) -> None:
        """Recompute all volumes and cuts from the underlying graph."""
        order = []
        stack = [self.root]
        while stack:
            nid = stack.pop()
            order.append(nid)
            stack.extend(self.nodes[nid].children)
        for nid in reversed(order):
            node = self.nodes[nid]
            if node.is_leaf:
                node.volume = float(self.graph.degree[node.vertex])
                node.cut = node.volume
            else:
                node.volume = sum(self.nodes[c].volume for c in node.children)
                node.cut = self.graph.cut_of(self.vertices_of(nid)) if nid != self.root else 0.0

    def check_invariants(self, tol: float = 1e-9) -> None:
        """Raise InvariantError unless structure and caches are coherent."""
        root = self.nodes.get(self.root)
        if root is None or root.parent is not None:
            raise InvariantError("missing or mis-parented root")
        seen_vertices: list[int] = []
        reached = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in reached:
                raise InvariantError(f"node {nid} reached twice")
            reached.add(nid)
            node = self.nodes[nid]
            if node.is_leaf:
                if node.children:
                    raise InvariantError(f"leaf {nid} has children")
                seen_vertices.append(node.vertex)
            else:
                if not node.children:
                    raise InvariantError(f"interior node {nid} has no children")
                for c in node.children:
                    if self.nodes[c].parent != nid:
                        raise InvariantError(f"child {c} does not point back to {nid}")
                stack.extend(node.children)
        if reached != set(self.nodes):
            raise InvariantError("orphan nodes present")
        if sorted(seen_vertices) != list(range(self.graph.n)):
            raise InvariantError("leaves do not biject with graph vertices")
        expect = self.copy()
        expect.recompute_caches()
        for nid, node in self.nodes.items():
            ref = expect.nodes[nid]
            scale = max(1.0, abs(ref.volume), abs(ref.cut))
            if abs(node.volume - ref.volume) > tol * scale or abs(node.cut - ref.cut) > tol * scale:
                raise InvariantError(
                    f"stale caches at node {nid}: ({node.volume}, {node.cut}) "
                    f"vs recomputed ({ref.volume}, {ref.cut})"
                )

    # ---- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            entry = {
                "id": node.id,
                "parent": node.parent,
                "children": list(node.children),
                "volume": node.volume,
                "cut": node.cut,
                "assigned_entropy": None if node.parent is None else self.assigned_entropy(nid),
            }
            if node.is_leaf:
                entry["vertices"] = [node.vertex]
            nodes.append(entry)
        return {"n": self.graph.n, "root": self.root, "nodes": nodes}

    @classmethod
    def from_dict(cls, payload: dict, graph: WeightedGraph) -> "EncodingTree":
        try:
            if payload["n"] != graph.n:
                raise ParseError(f"tree dump is for n={payload['n']}, graph has n={graph.n}")
            nodes = {}
            for entry in payload["nodes"]:
                vertices = entry.get("vertices")
                nodes[entry["id"]] = TreeNode(
                    id=entry["id"], parent=entry["parent"],
                    children=list(entry["children"]),
                    vertex=vertices[0] if vertices else None,
                    volume=float(entry["volume"]), cut=float(entry["cut"]),
                )
            tree = cls(graph, nodes, payload["root"], max(nodes) + 1)
        except (KeyError, TypeError, IndexError) as exc:
            raise ParseError(f"malformed tree dump: {exc}") from exc
        return tree


def dump_tree(tree: EncodingTree, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(tree.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_tree(path, graph: WeightedGraph) -> EncodingTree:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return EncodingTree.from_dict(payload, graph)


def optimize(
    graph: WeightedGraph,
    k: int,
    audit: list | None = None,
    debug: bool = False,
) -> EncodingTree:
    """Greedy height-bounded tree optimization.

    From the one-layer tree, repeatedly pick the layer whose non-leaf nodes
    give the best average trial stretch-then-compress reduction (ties to the
    smallest layer index), apply the operators to every node of that layer in
    ascending id order, and recompute the true tree height. Stops when the
    height reaches k or no layer yields a positive reduction. The result
    satisfies height <= k and tree_entropy <= one_dim_entropy.
    """
    if k < 2:
        raise ValueError("tree height bound must be >= 2")
    if graph.is_degenerate:
        warnings.warn("graph has zero volume", DegenerateGraphWarning, stacklevel=2)
        return EncodingTree.one_layer(graph)
    tree = EncodingTree.one_layer(graph)
    while tree.height < k:
        h = tree.height
        best_layer, best_reduction = None, EPS
        for i in range(h):
            r = tree.avg_layer_reduction(i)
            if r > best_reduction:
                best_layer, best_reduction = i, r
        if best_layer is None:
            break
        for nid in tree.layer_nodes(best_layer):
            tree.stretch(nid, audit=audit, debug=debug)
            tree.compress(nid, audit=audit, debug=debug)
    return tree
