"""Synthetic star-community networks, edge-list IO, and train/test splits.

Edge-list files are UTF-8 text, one event per line, whitespace separated:
``src dst timestamp relation`` with relation in {TW, RT, MT, RE}; lines
starting with ``#`` are ignored. Star-network configs are TOML with exact
keys ``communities, sizes, inter_edge_prob, mix.tweet, mix.retweet,
mix.mention, mix.reply, seed``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ParseError
from .graphs import Event, MultiRelGraph, RelationKind, build_multirel

_MIX_KEYS = {"tweet": RelationKind.TWEET, "retweet": RelationKind.RETWEET,
             "mention": RelationKind.MENTION, "reply": RelationKind.REPLY}


@dataclass(frozen=True)
class StarNetConfig:
    """Hub-and-spoke community generator parameters."""

    communities: int
    sizes: tuple[int, ...]
    inter_edge_prob: float
    mix: Mapping[RelationKind, float]
    seed: int = 0

    def __post_init__(self):
        if self.communities < 1:
            raise ConfigError("communities must be >= 1")
        if len(self.sizes) != self.communities:
            raise ConfigError(
                f"sizes has {len(self.sizes)} entries for {self.communities} communities")
        if any(s < 2 for s in self.sizes):
            raise ConfigError("every community size must be >= 2 (hub plus a leaf)")
        if not 0.0 <= self.inter_edge_prob <= 1.0:
            raise ConfigError("inter_edge_prob must lie in [0, 1]")
        weights = [float(self.mix.get(k, 0.0)) for k in RelationKind]
        if any(w < 0 for w in weights):
            raise ConfigError("mix probabilities must be >= 0")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigError(f"mix probabilities sum to {sum(weights)!r}, expected 1")

    @property
    def n(self) -> int:
        return int(sum(self.sizes))

    @classmethod
    def from_mapping(cls, data: Mapping) -> "StarNetConfig":
        known = {"communities", "sizes", "inter_edge_prob", "mix", "seed"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown star-network keys: {sorted(extra)}")
        try:
            communities = int(data["communities"])
            sizes = data["sizes"]
            q = float(data["inter_edge_prob"])
        except KeyError as exc:
            raise ConfigError(f"missing star-network key {exc.args[0]!r}") from None
        if isinstance(sizes, (int, float)):
            sizes = (int(sizes),) * communities
        else:
            sizes = tuple(int(s) for s in sizes)
        mix_raw = data.get("mix", {})
        if not isinstance(mix_raw, Mapping):
            raise ConfigError("mix must be a table of relation probabilities")
        extra_mix = set(mix_raw) - set(_MIX_KEYS)
        if extra_mix:
            raise ConfigError(f"unknown mix keys: {sorted(extra_mix)}")
        mix = {kind: float(mix_raw.get(name, 0.0)) for name, kind in _MIX_KEYS.items()}
        return cls(communities=communities, sizes=sizes, inter_edge_prob=q,
                   mix=mix, seed=int(data.get("seed", 0)))


def parse_star_config(path: str | Path) -> StarNetConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return StarNetConfig.from_mapping(data)


def gen_star_network(cfg: StarNetConfig) -> MultiRelGraph:
    """Stars with hub-to-leaf edges plus seeded random hub-to-hub bridges."""
    rng = np.random.default_rng(cfg.seed)
    kinds = tuple(RelationKind)
    probs = np.array([cfg.mix.get(k, 0.0) for k in kinds], dtype=float)

    def draw_kind() -> RelationKind:
        return kinds[int(rng.choice(len(kinds), p=probs))]

    offsets = np.concatenate([[0], np.cumsum(cfg.sizes)]).astype(int)
    hubs = [int(offsets[i]) for i in range(cfg.communities)]
    events: list[Event] = []
    ts = 0
    for i in range(cfg.communities):
        hub = hubs[i]
        for leaf in range(hub + 1, int(offsets[i + 1])):
            events.append((hub, leaf, draw_kind(), ts))
            ts += 1
    for i in range(cfg.communities):
        for j in range(cfg.communities):
            if i != j and rng.random() < cfg.inter_edge_prob:
                events.append((hubs[i], hubs[j], draw_kind(), ts))
                ts += 1
    return build_multirel(events, n=cfg.n)


# ---- edge-list IO --------------------------------------------------------------


def _parse_event_line(parts: list[str], where: str,
                      expect: RelationKind | None = None) -> Event:
    if len(parts) not in (3, 4) or (expect is None and len(parts) != 4):
        raise ParseError(f"{where}: expected 'src dst timestamp relation', got {len(parts)} fields")
    try:
        src, dst, ts = int(parts[0]), int(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError(f"{where}: non-integer vertex id or timestamp") from None
    if len(parts) == 4:
        try:
            kind = RelationKind.from_code(parts[3])
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None
        if expect is not None and kind is not expect:
            raise ParseError(f"{where}: relation {kind.value} in a {expect.value} file")
    else:
        kind = expect  # type: ignore[assignment]
    return (src, dst, kind, ts)


def load_edge_list(path: str | Path) -> tuple[list[Event], int]:
    """Read events; the vertex count is max id + 1 (0 for an empty file)."""
    path = Path(path)
    events: list[Event] = []
    max_id = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            event = _parse_event_line(text.split(), f"{path}:{lineno}")
            events.append(event)
            max_id = max(max_id, event[0], event[1])
    return events, max_id + 1


def load_graph(path: str | Path, n: int | None = None) -> MultiRelGraph:
    events, inferred = load_edge_list(path)
    return build_multirel(events, n if n is not None else inferred)


def write_edge_list(path: str | Path, g: MultiRelGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# src dst timestamp relation\n")
        for src, dst, kind, ts in g.iter_events():
            fh.write(f"{src} {dst} {ts} {kind.value}\n")


def load_higgs(paths: Mapping[RelationKind | str, str | Path]) -> tuple[MultiRelGraph, dict[int, int]]:
    """Merge per-relation files with arbitrary user ids into one dense graph.

    Lines may carry 3 fields (relation implied by the file) or 4 (relation
    must match the file's kind). Returns the graph and the original-id to
    dense-id mapping (ascending original order).
    """
    by_kind: dict[RelationKind, Path] = {}
    for key, p in paths.items():
        kind = key if isinstance(key, RelationKind) else RelationKind.from_code(str(key))
        if kind in by_kind:
            raise ConfigError(f"duplicate relation {kind.value} in higgs paths")
        by_kind[kind] = Path(p)

    raw: list[Event] = []
    ids: set[int] = set()
    for kind in RelationKind:
        if kind not in by_kind:
            continue
        path = by_kind[kind]
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                src, dst, k, ts = _parse_event_line(text.split(), f"{path}:{lineno}", expect=kind)
                raw.append((src, dst, k, ts))
                ids.add(src)
                ids.add(dst)
    id_map = {orig: dense for dense, orig in enumerate(sorted(ids))}
    events = [(id_map[s], id_map[d], k, t) for s, d, k, t in raw]
    return build_multirel(events, n=len(id_map)), id_map


# ---- train/test split -----------------------------------------------------------


@dataclass(frozen=True)
class SplitResult:
    train: MultiRelGraph
    test: MultiRelGraph
    train_vertices: tuple[int, ...]  # original ids, ascending; position = new id
    test_vertices: tuple[int, ...]
    dropped_edges: Mapping[RelationKind, int]

    @property
    def total_dropped(self) -> int:
        return int(sum(self.dropped_edges.values()))


def split(g: MultiRelGraph, train_fraction: float, seed: int) -> SplitResult:
    """Seeded vertex-induced split; edges crossing the cut are dropped."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    k = int(round(train_fraction * g.n))
    if k <= 0 or k >= g.n:
        raise ConfigError(f"train_fraction {train_fraction} leaves one side empty for n={g.n}")
    perm = np.random.default_rng(seed).permutation(g.n)
    train_ids = np.sort(perm[:k])
    test_ids = np.sort(perm[k:])
    train_pos = {int(v): i for i, v in enumerate(train_ids)}
    test_pos = {int(v): i for i, v in enumerate(test_ids)}

    train_events: list[Event] = []
    test_events: list[Event] = []
    dropped = {kind: 0 for kind in RelationKind}
    for src, dst, kind, ts in g.iter_events():
        if src in train_pos and dst in train_pos:
            train_events.append((train_pos[src], train_pos[dst], kind, ts))
        elif src in test_pos and dst in test_pos:
            test_events.append((test_pos[src], test_pos[dst], kind, ts))
        else:
            dropped[kind] += 1
    return SplitResult(
        train=build_multirel(train_events, n=k),
        test=build_multirel(test_events, n=g.n - k),
        train_vertices=tuple(int(v) for v in train_ids),
        test_vertices=tuple(int(v) for v in test_ids),
        dropped_edges=dropped,
    )
