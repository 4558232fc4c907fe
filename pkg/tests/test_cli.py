from __future__ import annotations

import json
import math

import pytest

from sesim.cli import main

STAR_TOML = """\
communities = 3
sizes = 6
inter_edge_prob = 0.5
seed = 2

[mix]
tweet = 0.6
retweet = 0.2
mention = 0.1
reply = 0.1
"""

EPISODE_TOML = """\
seed = 1
episodes = 2

[star]
communities = 3
sizes = 6
inter_edge_prob = 0.5
seed = 2

[star.mix]
tweet = 0.6
retweet = 0.2
mention = 0.1
reply = 0.1

[episode]
t_max = 8
trials = 40

[episode.detector]
base_rate = 0.05
"""

COMPARE_TOML = """\
seed = 1
selectors = ["degree", "entropy"]
budgets = [1, 2]

[star]
communities = 3
sizes = 6
inter_edge_prob = 0.5
seed = 2

[star.mix]
tweet = 0.6
retweet = 0.2
mention = 0.1
reply = 0.1

[episode]
t_max = 5
trials = 40

[episode.detector]
base_rate = 0.05
"""


@pytest.fixture
def star_toml(tmp_path):
    path = tmp_path / "net.toml"
    path.write_text(STAR_TOML)
    return path


@pytest.fixture
def edge_file(tmp_path, star_toml):
    out = tmp_path / "gen"
    assert main(["gen", str(star_toml), "--out-dir", str(out), "--out", "net.txt"]) == 0
    return out / "net.txt"


def read_manifest(out_dir, command):
    path = out_dir / f"{command}_manifest.json"
    assert path.exists()
    manifest = json.loads(path.read_text())
    assert set(manifest) == {"command", "config", "seed", "version", "outputs",
                             "wall_clock_s"}
    assert manifest["command"] == command
    assert manifest["version"].startswith("sesim-v")
    return manifest


class TestGen:
    def test_writes_network_and_manifest(self, tmp_path, star_toml, capsys):
        out = tmp_path / "o"
        assert main(["gen", str(star_toml), "--out-dir", str(out)]) == 0
        assert (out / "network.txt").exists()
        assert "n=18 events=" in capsys.readouterr().out
        manifest = read_manifest(out, "gen")
        assert manifest["outputs"] == ["network.txt"]
        assert manifest["seed"] == 2

    def test_seed_override_recorded(self, tmp_path, star_toml):
        out = tmp_path / "o"
        assert main(["gen", str(star_toml), "--out-dir", str(out), "--seed", "7"]) == 0
        assert read_manifest(out, "gen")["seed"] == 7

    def test_bad_toml_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("communities = [oops\n")
        assert main(["gen", str(path), "--out-dir", str(tmp_path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_config_exits_3(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("communities = 0\nsizes = 3\ninter_edge_prob = 0.0\n"
                        "[mix]\ntweet = 1.0\n")
        assert main(["gen", str(path), "--out-dir", str(tmp_path)]) == 3
        assert "error:" in capsys.readouterr().err


class TestTree:
    def test_reports_entropies(self, tmp_path, edge_file, capsys):
        out = tmp_path / "tree"
        assert main(["tree", str(edge_file), "--out-dir", str(out), "--k", "3"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "degenerate = false"
        h1 = float(lines[1].split(" = ")[1])
        ht = float(lines[2].split(" = ")[1])
        assert lines[3].startswith("reduction_pct = ")
        assert 0 < ht <= h1
        payload = json.loads((out / "tree.json").read_text())
        assert payload["n"] == 18
        assert any(e["parent"] is None for e in payload["nodes"])
        read_manifest(out, "tree")

    def test_missing_graph_exits_2(self, tmp_path):
        assert main(["tree", str(tmp_path / "nope.txt"),
                     "--out-dir", str(tmp_path)]) == 2

    def test_malformed_graph_exits_2(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 1 0 TW\n0 1\n")
        assert main(["tree", str(bad), "--out-dir", str(tmp_path)]) == 2

    def test_k_below_two_exits_3(self, tmp_path, edge_file):
        assert main(["tree", str(edge_file), "--out-dir", str(tmp_path),
                     "--k", "1"]) == 3

    def test_features_require_single_relation(self, tmp_path, edge_file):
        assert main(["tree", str(edge_file), "--out-dir", str(tmp_path),
                     "--features", str(tmp_path / "f.csv")]) == 3

    def test_empty_relation_view_is_degenerate(self, tmp_path, capsys):
        graph = tmp_path / "tw.txt"
        graph.write_text("0 1 0 TW\n1 2 1 TW\n")
        out = tmp_path / "t"
        assert main(["tree", str(graph), "--relation", "RE",
                     "--out-dir", str(out)]) == 0
        assert "degenerate = true" in capsys.readouterr().out


class TestDiffuse:
    def test_csv_contract(self, tmp_path, edge_file, capsys):
        out = tmp_path / "d"
        assert main(["diffuse", str(edge_file), "--seeds", "1,0",
                     "--p", "0.5", "--trials", "400",
                     "--out-dir", str(out)]) == 0
        lines = (out / "diffuse.csv").read_text().splitlines()
        assert lines[0] == "seed_set,p,trials,mean,stderr,ratio"
        fields = lines[1].split(",")
        assert fields[0] == "0;1"
        assert fields[1] == "0.5"
        assert fields[2] == "400"
        assert float(fields[3]) >= 2.0
        assert "spread = " in capsys.readouterr().out
        read_manifest(out, "diffuse")

    def test_bad_seed_list_exits_3(self, tmp_path, edge_file):
        assert main(["diffuse", str(edge_file), "--seeds", "0,x",
                     "--out-dir", str(tmp_path)]) == 3

    def test_empty_seed_list_exits_3(self, tmp_path, edge_file):
        assert main(["diffuse", str(edge_file), "--seeds", ",",
                     "--out-dir", str(tmp_path)]) == 3

    def test_out_of_range_seed_exits_3(self, tmp_path, edge_file):
        assert main(["diffuse", str(edge_file), "--seeds", "9999",
                     "--out-dir", str(tmp_path)]) == 3


class TestEpisode:
    def _run(self, tmp_path, name):
        cfg = tmp_path / "ep.toml"
        cfg.write_text(EPISODE_TOML)
        out = tmp_path / name
        code = main(["episode", str(cfg), "--out-dir", str(out)])
        return code, out

    def test_outputs_and_summary_rows(self, tmp_path, capsys):
        code, out = self._run(tmp_path, "a")
        assert code == 0
        lines = (out / "episode_summary.csv").read_text().splitlines()
        assert lines[0] == "seed,reward,length,influence_ratio"
        assert len(lines) == 3
        assert [row.split(",")[0] for row in lines[1:]] == ["1", "2"]
        for row in lines[1:]:
            assert 1 <= int(row.split(",")[2]) <= 8
        printed = capsys.readouterr().out
        assert printed.count("seed=") == 2
        manifest = read_manifest(out, "episode")
        assert manifest["outputs"] == ["episode.jsonl", "episode_summary.csv"]

    def test_jsonl_rows_parse(self, tmp_path):
        _, out = self._run(tmp_path, "a")
        rows = [json.loads(line) for line in
                (out / "episode.jsonl").read_text().splitlines()]
        assert rows
        for row in rows:
            assert set(row) == {"seed", "t", "action", "new_follower", "reward",
                                "detected", "spread_estimate"}
            assert row["action"] in {"TW", "RT", "MT", "RE"}

    def test_reruns_byte_identical(self, tmp_path):
        _, out_a = self._run(tmp_path, "a")
        _, out_b = self._run(tmp_path, "b")
        for name in ("episode.jsonl", "episode_summary.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_flag_changes_rows(self, tmp_path):
        cfg = tmp_path / "ep.toml"
        cfg.write_text(EPISODE_TOML)
        out = tmp_path / "s"
        assert main(["episode", str(cfg), "--out-dir", str(out),
                     "--seed", "41"]) == 0
        lines = (out / "episode_summary.csv").read_text().splitlines()
        assert [row.split(",")[0] for row in lines[1:]] == ["41", "42"]

    def test_unknown_key_exits_3(self, tmp_path):
        cfg = tmp_path / "ep.toml"
        cfg.write_text(EPISODE_TOML + "\nbudget = 3\n")
        assert main(["episode", str(cfg), "--out-dir", str(tmp_path)]) == 3

    def test_graph_and_star_conflict_exits_3(self, tmp_path):
        cfg = tmp_path / "ep.toml"
        cfg.write_text('graph = "x.txt"\n' + EPISODE_TOML)
        assert main(["episode", str(cfg), "--out-dir", str(tmp_path)]) == 3

    def test_missing_source_exits_3(self, tmp_path):
        cfg = tmp_path / "ep.toml"
        cfg.write_text("[episode]\nt_max = 3\n")
        assert main(["episode", str(cfg), "--out-dir", str(tmp_path)]) == 3


class TestCompare:
    def test_matrix_rows_in_input_order(self, tmp_path, capsys):
        cfg = tmp_path / "cmp.toml"
        cfg.write_text(COMPARE_TOML)
        out = tmp_path / "c"
        assert main(["compare", str(cfg), "--out-dir", str(out)]) == 0
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[0] == "selector,budget,p,seed_set,mean_spread,stderr,wall_ms,error"
        cells = [tuple(row.split(",")[:2]) for row in lines[1:]]
        assert cells == [("degree", "1"), ("degree", "2"),
                         ("entropy", "1"), ("entropy", "2")]
        for row in lines[1:]:
            assert row.rsplit(",", 1)[1] == ""
        assert "wrote 4 rows" in capsys.readouterr().out
        read_manifest(out, "compare")

    def test_budget_overflow_warns_but_succeeds(self, tmp_path, capsys):
        cfg = tmp_path / "cmp.toml"
        cfg.write_text(COMPARE_TOML.replace("budgets = [1, 2]", "budgets = [999]"))
        out = tmp_path / "c"
        assert main(["compare", str(cfg), "--out-dir", str(out)]) == 0
        assert "warning: degree/999" in capsys.readouterr().err
        lines = (out / "compare.csv").read_text().splitlines()
        fields = lines[1].split(",")
        assert math.isnan(float(fields[4]))
        assert fields[-1] != ""

    def test_unknown_selector_exits_3(self, tmp_path):
        cfg = tmp_path / "cmp.toml"
        cfg.write_text(COMPARE_TOML.replace('"degree"', '"pagerank"'))
        assert main(["compare", str(cfg), "--out-dir", str(tmp_path)]) == 3

    def test_empty_matrix_exits_3(self, tmp_path):
        cfg = tmp_path / "cmp.toml"
        cfg.write_text(COMPARE_TOML.replace("budgets = [1, 2]", "budgets = []"))
        assert main(["compare", str(cfg), "--out-dir", str(tmp_path)]) == 3


class TestSplit:
    def test_writes_both_sides(self, tmp_path, edge_file, capsys):
        out = tmp_path / "sp"
        assert main(["split", str(edge_file), "--fraction", "0.5",
                     "--out-dir", str(out), "--seed", "3"]) == 0
        assert (out / "train.txt").exists()
        assert (out / "test.txt").exists()
        printed = capsys.readouterr().out
        assert "train_n=9 test_n=9" in printed
        assert "dropped=" in printed
        manifest = read_manifest(out, "split")
        assert manifest["outputs"] == ["train.txt", "test.txt"]
        assert manifest["seed"] == 3

    def test_bad_fraction_exits_3(self, tmp_path, edge_file):
        assert main(["split", str(edge_file), "--fraction", "1.5",
                     "--out-dir", str(tmp_path)]) == 3


class TestParser:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("sesim-v")

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
