"""Command-line front end: trees, diffusion, episodes, comparisons, data prep.

Subcommands: tree, diffuse, episode, compare, gen, split. Every run writes a
manifest JSON next to its outputs. All CSV numerics use 9 significant digits.
Exit codes: 0 success, 2 I/O or parse failure, 3 bad configuration, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .entropy import dump_tree, one_dim_entropy, optimize
from .errors import ConfigError, DegenerateGraphWarning, InvariantError, ParseError
from .episode import (
    DetectorModel,
    Episode,
    EpisodeConfig,
    make_activity_policy,
    run_compare,
)
from .graphs import (
    MultiRelGraph,
    RelationKind,
    WeightedGraph,
    load_features,
    project,
)
from .influence import DiffusionConfig, icm_simulate, influence_ratio
from .netgen import (
    StarNetConfig,
    gen_star_network,
    load_graph,
    parse_star_config,
    split,
    write_edge_list,
)


def _fmt(x) -> str:
    """9 significant digits for floats; plain repr for everything else."""
    if isinstance(x, (float, np.floating)):
        return "%.9g" % x
    return str(x)


def _write_manifest(out_dir: Path, command: str, config: dict, seed,
                    outputs: list[str], started: float) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": f"sesim-v{__version__}",
        "outputs": outputs,
        "wall_clock_s": time.perf_counter() - started,
    }
    path = out_dir / f"{command}_manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _check_keys(data: dict, allowed: set[str], where: str) -> None:
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown {where} keys: {sorted(extra)}")


def _resolve_graph(data: dict, base_dir: Path) -> MultiRelGraph:
    if "graph" in data and "star" in data:
        raise ConfigError("config sets both 'graph' and 'star'; pick one")
    if "graph" in data:
        return load_graph(base_dir / str(data["graph"]))
    if "star" in data:
        return gen_star_network(StarNetConfig.from_mapping(data["star"]))
    raise ConfigError("config needs a 'graph' path or a [star] table")


def _relation_weighted_view(g: MultiRelGraph, relation: str) -> WeightedGraph:
    if relation == "all":
        return g.diffusion_view()
    kind = RelationKind.from_code(relation)
    arr = g.edges.get(kind)
    if arr is None or len(arr) == 0:
        return WeightedGraph(g.n, np.zeros(0, dtype=np.int64),
                             np.zeros(0, dtype=np.int64), np.zeros(0))
    return WeightedGraph(g.n, arr[:, 0], arr[:, 1], np.ones(len(arr)))


def _episode_config(data: dict, seed_override: int | None) -> EpisodeConfig:
    ep = dict(data.get("episode", {}))
    det_raw = dict(ep.pop("detector", {}))
    act_raw = dict(ep.pop("activity", {}))
    _check_keys(ep, {
        "p", "t_max", "bot", "tree_k", "embed_dim", "prune_ratio", "trials",
        "selector", "selection_mode", "follower_budget", "gamma",
    }, "[episode]")
    _check_keys(det_raw, {"base_rate", "follow_sensitivity", "window",
                          "target_accuracy"}, "[episode.detector]")
    _check_keys(act_raw, {"kind", "profile", "script"}, "[episode.activity]")

    detector = DetectorModel(
        base_rate=det_raw.get("base_rate"),
        follow_sensitivity=float(det_raw.get("follow_sensitivity", 2.0)),
        window=int(det_raw.get("window", 10)),
        target_accuracy=float(det_raw.get("target_accuracy", 0.9)),
    )
    script = None
    if "script" in act_raw:
        try:
            script = [RelationKind.from_code(str(s)) for s in act_raw["script"]]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    activity = make_activity_policy(
        str(act_raw.get("kind", "uniform")),
        profile=act_raw.get("profile"),
        script=script,
    )
    seed = seed_override if seed_override is not None else int(data.get("seed", 0))
    budget = ep.get("follower_budget")
    return EpisodeConfig(
        seed=seed,
        p=float(ep.get("p", 0.8)),
        t_max=int(ep.get("t_max", 120)),
        bot=int(ep.get("bot", 0)),
        tree_k=int(ep.get("tree_k", 3)),
        embed_dim=int(ep.get("embed_dim", 8)),
        prune_ratio=float(ep.get("prune_ratio", 0.05)),
        trials=int(ep.get("trials", 200)),
        selector=str(ep.get("selector", "entropy")),
        selection_mode=str(ep.get("selection_mode", "sample")),
        follower_budget=None if budget is None else int(budget),
        gamma=float(ep.get("gamma", 1.0)),
        activity=activity,
        detector=detector,
    )


def _maybe_features(data: dict, base_dir: Path, n: int) -> np.ndarray | None:
    if "features" not in data:
        return None
    return load_features(base_dir / str(data["features"]), n)


def _parse_seed_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.replace(";", ",").split(",") if s.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}; expected comma-separated integers") from None


# ---- subcommands ---------------------------------------------------------------


def cmd_tree(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = load_graph(args.graph)
    if args.features is not None:
        if args.relation == "all":
            raise ConfigError("--features weighting needs a single --relation")
        feats = load_features(args.features, g.n)
        wg = project(g, RelationKind.from_code(args.relation), feats)
    else:
        wg = _relation_weighted_view(g, args.relation)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateGraphWarning)
        h1 = one_dim_entropy(wg)
        tree = optimize(wg, args.k)
    degenerate = any(issubclass(w.category, DegenerateGraphWarning) for w in caught)
    ht = tree.tree_entropy()
    out_path = out_dir / args.out
    dump_tree(tree, out_path)
    reduction = (1.0 - ht / h1) * 100.0 if h1 > 0 else 0.0
    print(f"degenerate = {str(degenerate).lower()}")
    print(f"H1 = {_fmt(h1)}")
    print(f"HT = {_fmt(ht)}")
    print(f"reduction_pct = {_fmt(reduction)}")
    _write_manifest(out_dir, "tree",
                    {"graph": str(args.graph), "relation": args.relation,
                     "k": args.k, "features": str(args.features) if args.features else None,
                     "out": args.out},
                    args.seed, [args.out], started)
    return 0


def cmd_diffuse(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = load_graph(args.graph)
    seeds = _parse_seed_list(args.seeds)
    if not seeds:
        raise ConfigError("--seeds needs at least one vertex id")
    cfg = DiffusionConfig(p=args.p, trials=args.trials,
                          seed=args.seed if args.seed is not None else 0)
    est = icm_simulate(g.diffusion_view(), seeds, cfg)
    ratio = influence_ratio(est.mean, g.n)
    out_path = out_dir / args.out
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("seed_set,p,trials,mean,stderr,ratio\n")
        fh.write(",".join([
            ";".join(str(s) for s in sorted(set(seeds))),
            _fmt(cfg.p), str(cfg.trials), _fmt(est.mean), _fmt(est.stderr), _fmt(ratio),
        ]) + "\n")
    print(f"spread = {_fmt(est.mean)} +/- {_fmt(est.stderr)} (ratio {_fmt(ratio)})")
    _write_manifest(out_dir, "diffuse",
                    {"graph": str(args.graph), "seeds": seeds, "p": args.p,
                     "trials": args.trials, "out": args.out},
                    cfg.seed, [args.out], started)
    return 0


def cmd_episode(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_path = Path(args.config)
    data = _load_toml(cfg_path)
    _check_keys(data, {"graph", "star", "features", "episodes", "seed", "episode"},
                "episode config")
    g = _resolve_graph(data, cfg_path.parent)
    feats = _maybe_features(data, cfg_path.parent, g.n)
    n_episodes = int(data.get("episodes", 1))
    if n_episodes < 1:
        raise ConfigError("episodes must be >= 1")
    base = _episode_config(data, args.seed)

    log_path = out_dir / "episode.jsonl"
    csv_path = out_dir / "episode_summary.csv"
    with open(log_path, "w", encoding="utf-8") as log, \
            open(csv_path, "w", encoding="utf-8") as csv:
        csv.write("seed,reward,length,influence_ratio\n")
        for i in range(n_episodes):
            cfg = dataclasses.replace(base, seed=base.seed + i)
            episode = Episode(cfg, g, feats)
            summary = episode.run()
            for outcome in episode.outcomes:
                row = {"seed": cfg.seed, **outcome.to_json_dict()}
                log.write(json.dumps(row, sort_keys=True) + "\n")
            csv.write(",".join([
                str(summary.seed), _fmt(summary.episode_reward),
                str(summary.episode_length), _fmt(summary.final_influence_ratio),
            ]) + "\n")
            print(f"seed={summary.seed} reward={_fmt(summary.episode_reward)}"
                  f" length={summary.episode_length}"
                  f" survival={summary.survival_steps}"
                  f" ratio={_fmt(summary.final_influence_ratio)}"
                  f" detected={str(summary.detected).lower()}")
    _write_manifest(out_dir, "episode", data, base.seed,
                    [log_path.name, csv_path.name], started)
    return 0


def cmd_compare(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_path = Path(args.config)
    data = _load_toml(cfg_path)
    _check_keys(data, {"graph", "star", "features", "selectors", "budgets",
                       "episodes", "seed", "episode"}, "compare config")
    g = _resolve_graph(data, cfg_path.parent)
    feats = _maybe_features(data, cfg_path.parent, g.n)
    selectors = [str(s) for s in data.get("selectors", [])]
    budgets = [int(b) for b in data.get("budgets", [])]
    if not selectors or not budgets:
        raise ConfigError("compare config needs nonempty 'selectors' and 'budgets'")
    episodes = int(data.get("episodes", 1))
    base = _episode_config(data, args.seed)
    rows = run_compare(g, base, selectors, budgets, episodes,
                       threads=args.threads, features=feats)
    out_path = out_dir / "compare.csv"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("selector,budget,p,seed_set,mean_spread,stderr,wall_ms,error\n")
        for row in rows:
            fh.write(",".join([
                row.selector, str(row.budget), _fmt(base.p),
                ";".join(str(v) for v in row.seed_set),
                _fmt(row.mean_spread), _fmt(row.stderr), _fmt(row.wall_ms),
                row.error or "",
            ]) + "\n")
            if row.error:
                print(f"warning: {row.selector}/{row.budget}: {row.error}",
                      file=sys.stderr)
    print(f"wrote {len(rows)} rows to {out_path}")
    _write_manifest(out_dir, "compare", data, base.seed, [out_path.name], started)
    return 0


def cmd_gen(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = parse_star_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    g = gen_star_network(cfg)
    out_path = out_dir / args.out
    write_edge_list(out_path, g)
    print(f"n={g.n} events={g.m}")
    _write_manifest(out_dir, "gen",
                    {"config": str(args.config), "communities": cfg.communities,
                     "sizes": list(cfg.sizes), "inter_edge_prob": cfg.inter_edge_prob,
                     "mix": {k.value: v for k, v in cfg.mix.items()}, "out": args.out},
                    cfg.seed, [args.out], started)
    return 0


def cmd_split(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = load_graph(args.graph)
    seed = args.seed if args.seed is not None else 0
    result = split(g, args.fraction, seed)
    train_path = out_dir / "train.txt"
    test_path = out_dir / "test.txt"
    write_edge_list(train_path, result.train)
    write_edge_list(test_path, result.test)
    dropped = ";".join(f"{k.value}={v}" for k, v in sorted(
        result.dropped_edges.items(), key=lambda kv: kv[0].value))
    print(f"train_n={result.train.n} test_n={result.test.n}"
          f" dropped={result.total_dropped} ({dropped})")
    _write_manifest(out_dir, "split",
                    {"graph": str(args.graph), "fraction": args.fraction},
                    seed, [train_path.name, test_path.name], started)
    return 0


# ---- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the run seed")
    common.add_argument("--out-dir", default=".",
                        help="directory for outputs and the manifest")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads where a command parallelizes")

    parser = argparse.ArgumentParser(prog="sesim",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"sesim-v{__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tree = sub.add_parser("tree", parents=[common],
                            help="optimize an encoding tree for a graph")
    p_tree.add_argument("graph", help="edge-list file")
    p_tree.add_argument("--relation", default="all",
                        choices=["all"] + [k.value for k in RelationKind])
    p_tree.add_argument("--k", type=int, default=3, help="tree height bound")
    p_tree.add_argument("--features", default=None,
                        help="CSV feature file for rank-correlation weights")
    p_tree.add_argument("--out", default="tree.json")
    p_tree.set_defaults(func=cmd_tree)

    p_diff = sub.add_parser("diffuse", parents=[common],
                            help="Monte Carlo cascade spread from a seed set")
    p_diff.add_argument("graph", help="edge-list file")
    p_diff.add_argument("--seeds", required=True,
                        help="comma-separated seed vertex ids")
    p_diff.add_argument("--p", type=float, default=0.8)
    p_diff.add_argument("--trials", type=int, default=10000)
    p_diff.add_argument("--out", default="diffuse.csv")
    p_diff.set_defaults(func=cmd_diffuse)

    p_ep = sub.add_parser("episode", parents=[common],
                          help="run adversarial episodes from a TOML config")
    p_ep.add_argument("config", help="TOML episode config")
    p_ep.set_defaults(func=cmd_episode)

    p_cmp = sub.add_parser("compare", parents=[common],
                           help="selector-vs-budget comparison matrix")
    p_cmp.add_argument("config", help="TOML compare config")
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("gen", parents=[common],
                           help="generate a star-community network")
    p_gen.add_argument("config", help="TOML star-network config")
    p_gen.add_argument("--out", default="network.txt")
    p_gen.set_defaults(func=cmd_gen)

    p_split = sub.add_parser("split", parents=[common],
                             help="seeded vertex-induced train/test split")
    p_split.add_argument("graph", help="edge-list file")
    p_split.add_argument("--fraction", type=float, required=True,
                         help="train-side vertex fraction in (0, 1)")
    p_split.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
