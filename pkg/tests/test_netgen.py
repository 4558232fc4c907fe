from __future__ import annotations

from collections import Counter

import pytest

from conftest import STAR_MIX
from sesim.errors import ConfigError, ParseError
from sesim.graphs import RelationKind
from sesim.netgen import (
    StarNetConfig,
    gen_star_network,
    load_edge_list,
    load_graph,
    load_higgs,
    parse_star_config,
    split,
    write_edge_list,
)

TWEET_ONLY = {RelationKind.TWEET: 1.0}


class TestStarNetConfig:
    def test_vertex_count(self):
        cfg = StarNetConfig(2, (3, 4), 0.0, TWEET_ONLY)
        assert cfg.n == 7

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(communities=0, sizes=(), inter_edge_prob=0.0, mix=TWEET_ONLY),
            dict(communities=2, sizes=(3,), inter_edge_prob=0.0, mix=TWEET_ONLY),
            dict(communities=1, sizes=(1,), inter_edge_prob=0.0, mix=TWEET_ONLY),
            dict(communities=1, sizes=(3,), inter_edge_prob=1.5, mix=TWEET_ONLY),
            dict(communities=1, sizes=(3,), inter_edge_prob=0.0,
                 mix={RelationKind.TWEET: 2.0, RelationKind.REPLY: -1.0}),
            dict(communities=1, sizes=(3,), inter_edge_prob=0.0,
                 mix={RelationKind.TWEET: 0.4}),
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ConfigError):
            StarNetConfig(**kwargs)

    def test_from_mapping_broadcasts_scalar_sizes(self):
        cfg = StarNetConfig.from_mapping(
            {"communities": 3, "sizes": 5, "inter_edge_prob": 0.2,
             "mix": {"tweet": 1.0}}
        )
        assert cfg.sizes == (5, 5, 5)
        assert cfg.seed == 0

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown star-network keys"):
            StarNetConfig.from_mapping(
                {"communities": 1, "sizes": 3, "inter_edge_prob": 0.0,
                 "mix": {"tweet": 1.0}, "hubs": 2}
            )

    def test_from_mapping_rejects_unknown_mix_keys(self):
        with pytest.raises(ConfigError, match="unknown mix keys"):
            StarNetConfig.from_mapping(
                {"communities": 1, "sizes": 3, "inter_edge_prob": 0.0,
                 "mix": {"tweet": 0.5, "like": 0.5}}
            )

    def test_from_mapping_missing_key(self):
        with pytest.raises(ConfigError, match="missing star-network key"):
            StarNetConfig.from_mapping({"communities": 1, "sizes": 3})


class TestParseStarConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "net.toml"
        path.write_text(
            "communities = 2\nsizes = [3, 4]\ninter_edge_prob = 0.25\n"
            "seed = 9\n[mix]\ntweet = 0.5\nreply = 0.5\n"
        )
        cfg = parse_star_config(path)
        assert cfg.communities == 2
        assert cfg.sizes == (3, 4)
        assert cfg.mix[RelationKind.REPLY] == 0.5
        assert cfg.seed == 9

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("communities = [unterminated\n")
        with pytest.raises(ParseError):
            parse_star_config(path)


class TestGenStarNetwork:
    def test_single_star_no_bridges(self):
        g = gen_star_network(StarNetConfig(1, (5,), 0.0, TWEET_ONLY))
        events = list(g.iter_events())
        assert g.n == 5
        assert len(events) == 4
        assert {(s, d) for s, d, _, _ in events} == {(0, v) for v in range(1, 5)}
        assert [ts for _, _, _, ts in events] == [0, 1, 2, 3]

    def test_certain_bridges_connect_all_hub_pairs(self):
        g = gen_star_network(StarNetConfig(3, (2, 2, 2), 1.0, TWEET_ONLY))
        pairs = {(s, d) for s, d, _, _ in g.iter_events() if s != d}
        hubs = (0, 2, 4)
        bridges = {(a, b) for a in hubs for b in hubs if a != b}
        assert bridges <= pairs
        assert len(list(g.iter_events())) == 3 + 6

    def test_mix_degenerate(self):
        g = gen_star_network(StarNetConfig(2, (4, 4), 1.0, TWEET_ONLY, seed=3))
        assert all(k is RelationKind.TWEET for _, _, k, _ in g.iter_events())

    def test_seed_determinism(self, star_config):
        a = gen_star_network(star_config)
        b = gen_star_network(star_config)
        assert list(a.iter_events()) == list(b.iter_events())
        c = gen_star_network(StarNetConfig(
            star_config.communities, star_config.sizes,
            star_config.inter_edge_prob, STAR_MIX, seed=star_config.seed + 1))
        assert list(c.iter_events()) != list(a.iter_events())

    def test_leaves_touch_exactly_one_event(self, star_graph, star_config):
        touched = Counter()
        for s, d, _, _ in star_graph.iter_events():
            touched[s] += 1
            touched[d] += 1
        hubs = {sum(star_config.sizes[:i]) for i in range(star_config.communities)}
        for v in range(star_graph.n):
            if v in hubs:
                assert touched[v] >= star_config.sizes[0] - 1
            else:
                assert touched[v] == 1


class TestEdgeListIO:
    def test_round_trip(self, tmp_path, star_graph):
        path = tmp_path / "net.edges"
        write_edge_list(path, star_graph)
        back = load_graph(path)
        assert back.n == star_graph.n
        assert sorted(back.iter_events()) == sorted(star_graph.iter_events())

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "sparse.edges"
        path.write_text("# header\n\n0 1 0 TW\n  \n2 0 1 RE\n")
        events, n = load_edge_list(path)
        assert n == 3
        assert events == [(0, 1, RelationKind.TWEET, 0), (2, 0, RelationKind.REPLY, 1)]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.edges"
        path.write_text("")
        assert load_edge_list(path) == ([], 0)

    def test_explicit_n_override(self, tmp_path):
        path = tmp_path / "one.edges"
        path.write_text("0 1 0 MT\n")
        assert load_graph(path, n=10).n == 10

    @pytest.mark.parametrize(
        "line",
        ["0 1", "0 1 2", "a 1 2 TW", "0 1 x RT", "0 1 2 LIKE"],
    )
    def test_malformed_lines(self, tmp_path, line):
        path = tmp_path / "bad.edges"
        path.write_text("0 1 0 TW\n" + line + "\n")
        with pytest.raises(ParseError, match="bad.edges:2"):
            load_edge_list(path)


class TestLoadHiggs:
    def test_merge_and_dense_remap(self, tmp_path):
        tw = tmp_path / "higgs-tw.edges"
        tw.write_text("100 250 5\n250 7 6\n")
        rt = tmp_path / "higgs-rt.edges"
        rt.write_text("7 100 2 RT\n")
        g, id_map = load_higgs({"TW": tw, RelationKind.RETWEET: rt})
        assert id_map == {7: 0, 100: 1, 250: 2}
        assert g.n == 3
        assert sorted(g.iter_events()) == [
            (0, 1, RelationKind.RETWEET, 2),
            (1, 2, RelationKind.TWEET, 5),
            (2, 0, RelationKind.TWEET, 6),
        ]

    def test_relation_field_must_match_file(self, tmp_path):
        tw = tmp_path / "higgs-tw.edges"
        tw.write_text("1 2 3 RT\n")
        with pytest.raises(ParseError, match="RT in a TW file"):
            load_higgs({RelationKind.TWEET: tw})

    def test_duplicate_relation_rejected(self, tmp_path):
        tw = tmp_path / "a.edges"
        tw.write_text("0 1 0 TW\n")
        with pytest.raises(ConfigError, match="duplicate relation"):
            load_higgs({"TW": tw, RelationKind.TWEET: tw})


class TestSplit:
    def _graph(self, rng_seed=11):
        import numpy as np

        from conftest import random_multirel

        return random_multirel(np.random.default_rng(rng_seed), 30, 120)

    def test_partitions_vertices(self):
        g = self._graph()
        res = split(g, 0.6, seed=4)
        train, test = set(res.train_vertices), set(res.test_vertices)
        assert train | test == set(range(g.n))
        assert not train & test
        assert len(train) == round(0.6 * g.n)
        assert res.train.n == len(train)
        assert res.test.n == len(test)

    def test_deterministic_and_seed_sensitive(self):
        g = self._graph()
        a = split(g, 0.5, seed=4)
        b = split(g, 0.5, seed=4)
        assert a.train_vertices == b.train_vertices
        assert sorted(a.train.iter_events()) == sorted(b.train.iter_events())
        c = split(g, 0.5, seed=5)
        assert c.train_vertices != a.train_vertices

    def test_dropped_counts_match_cut(self):
        g = self._graph()
        res = split(g, 0.5, seed=0)
        train = set(res.train_vertices)
        kept = 0
        crossing = {k: 0 for k in RelationKind}
        for s, d, k, _ in g.iter_events():
            if (s in train) == (d in train):
                kept += 1
            else:
                crossing[k] += 1
        assert dict(res.dropped_edges) == crossing
        assert res.total_dropped == sum(crossing.values())
        n_train = len(list(res.train.iter_events()))
        n_test = len(list(res.test.iter_events()))
        assert n_train + n_test == kept

    def test_side_events_are_induced(self):
        g = self._graph()
        res = split(g, 0.5, seed=2)
        pos = {v: i for i, v in enumerate(res.train_vertices)}
        expect = sorted(
            (pos[s], pos[d], k, ts)
            for s, d, k, ts in g.iter_events()
            if s in pos and d in pos
        )
        assert sorted(res.train.iter_events()) == expect

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2, 1.3])
    def test_fraction_domain(self, fraction):
        with pytest.raises(ConfigError):
            split(self._graph(), fraction, seed=0)

    def test_degenerate_side_rejected(self):
        g = self._graph()
        with pytest.raises(ConfigError):
            split(g, 0.001, seed=0)
