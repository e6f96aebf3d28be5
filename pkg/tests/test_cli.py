import json
import os
from pathlib import Path

import pytest

from dmnai.cli import main
from dmnai.trace import CSV_COLUMNS


def read_tree(root: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["generate", "--kind", "random", "--n", "60", "--param", "0.06", "--master-seed", "4",
                 "--out", str(path)]) == 0
    return path


def test_generate_json(tmp_path):
    out = tmp_path / "g.json"
    assert main(["generate", "--kind", "preferential", "--n", "50", "--param", "2", "--topics", "2",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["topics"] == 2 and len(doc["nodes"]) == 50 and len(doc["edges"]) == 2 * 48


def test_simulate_twice_is_byte_identical(tmp_path, graph_file):
    args = ["simulate", "--graph", str(graph_file), "--seed-rule", "random-4", "--replicas", "3",
            "--master-seed", "17", "--rounds", "6"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--workers", "3"]) == 0
    assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")
    csv_lines = (tmp_path / "a" / "replica_000.csv").read_text().splitlines()
    assert csv_lines[0].startswith("# config=")
    assert csv_lines[1] == ",".join(CSV_COLUMNS)


def test_rerun_from_every_output(tmp_path, graph_file):
    first = tmp_path / "first"
    assert main(["simulate", "--graph", str(graph_file), "--seed-rule", "top-out-degree-3", "--replicas", "2",
                 "--master-seed", "5", "--out", str(first), "--tau", "0.3"]) == 0
    reference = read_tree(first)
    for i, name in enumerate(sorted(reference)):
        again = tmp_path / f"again{i}"
        assert main(["simulate", "--rerun", str(first / name), "--out", str(again)]) == 0
        assert read_tree(again) == reference


def test_empty_seed_file(tmp_path, graph_file):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("# nobody\n")
    out = tmp_path / "out"
    assert main(["simulate", "--graph", str(graph_file), "--seeds", str(seeds), "--out", str(out)]) == 0
    rows = [l.split(",") for l in (out / "aggregate.csv").read_text().splitlines()[2:]]
    assert all(float(r[1]) == 0.0 for r in rows)


def test_generated_graph_reaches_seeds(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--generate", "random:100:0.05", "--seed-rule", "random-5", "--rounds", "10",
                 "--out", str(out)]) == 0
    last = (out / "replica_000.csv").read_text().splitlines()[-1].split(",")
    assert int(last[1]) >= 5


def test_config_file_and_flag_override(tmp_path, graph_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rounds": 3, "r2": 0.2, "kernel": {"lambda": 0.9}}))
    out = tmp_path / "out"
    assert main(["simulate", "--graph", str(graph_file), "--seed-rule", "random-2", "--config", str(cfg),
                 "--r2", "0.4", "--out", str(out)]) == 0
    doc = json.loads((out / "replica_000.json").read_text())
    resolved = doc["spec"]["config"]
    assert resolved["rounds"] == 3 and resolved["r2"] == 0.4 and resolved["kernel"]["lambda"] == 0.9
    assert len(doc["rounds"]) == 4


def test_ic_model(tmp_path, graph_file):
    out = tmp_path / "ic"
    assert main(["simulate", "--graph", str(graph_file), "--seed-rule", "random-3", "--model", "ic",
                 "--ic-probability", "0.5", "--replicas", "2", "--out", str(out)]) == 0
    doc = json.loads((out / "replica_000.json").read_text())
    assert doc["model"] == "ic"
    assert set(doc["final_state"]["0"]) <= {-1.0, 1.0}


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_accuracy_end_to_end(tmp_path, capsys):
    ref = _write(tmp_path / "ref.csv", "node,topic,stance\na,0,1\nb,0,0\nc,0,-1\nd,0,-1\n")
    three = _write(tmp_path / "sim.csv", "node,topic,stance\na,0,0.5\nb,0,0\nc,0,-1\nd,0,1\n")
    disjoint = _write(tmp_path / "dis.csv", "node,topic,stance\na,0,0\nb,0,1\nc,0,0.5\nd,0,0\n")
    out = str(tmp_path / "acc.csv")
    runs = [(ref, "range", "1.0000"), (ref, "stance", "1.0000"), (three, "range", "0.7500"), (disjoint, "stance", "0.0000")]
    for trace, metric, expected in runs:
        assert main(["accuracy", "--trace", trace, "--reference", ref, "--metric", metric, "--out", out]) == 0
        assert capsys.readouterr().out.strip() == expected
    lines = Path(out).read_text().splitlines()
    assert lines[0] == "metric,topic,value" and lines[3] == "range,0,0.7500"


def test_accuracy_universe_mismatch(tmp_path, capsys):
    ref = _write(tmp_path / "ref.csv", "node,topic,stance\nzz,0,1\n")
    sim = _write(tmp_path / "sim.csv", "node,topic,stance\na,0,1\n")
    assert main(["accuracy", "--trace", sim, "--reference", ref, "--out", str(tmp_path / "x.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_compare_self_reference(tmp_path, graph_file, capsys):
    run = tmp_path / "run"
    common = ["--graph", str(graph_file), "--seed-rule", "random-4", "--master-seed", "8", "--rounds", "5"]
    assert main(["simulate", *common, "--out", str(run)]) == 0
    capsys.readouterr()
    assert main(["compare", *common, "--reference", str(run / "replica_000_final.csv"),
                 "--out", str(tmp_path / "cmp")]) == 0
    report = capsys.readouterr().out.splitlines()
    assert report[0] == "metric,dmnai,ic"
    assert report[1].startswith("range_accuracy,1.0000,")
    assert (tmp_path / "cmp" / "compare_series.csv").exists()


def test_compare_ic_zero_probability_direct_count(tmp_path, graph_file, capsys):
    from dmnai.graph import load_graph

    g = load_graph(str(graph_file))
    ref = tmp_path / "full.csv"
    ref.write_text("node,topic,stance\n" + "".join(f"{v},0,1\n" for v in g.node_ids))
    seeds = _write(tmp_path / "seeds.txt", "".join(f"{v} 0 1\n" for v in g.node_ids[:6]))
    assert main(["compare", "--graph", str(graph_file), "--seeds", seeds, "--ic-probability", "0",
                 "--reference", str(ref), "--out", str(tmp_path / "cmp")]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[2] == f"{6 / g.n:.4f}"


def test_compare_mismatched_graphs(tmp_path, capsys):
    specs = []
    for i, param in enumerate(("random:20:0.1", "random:25:0.1")):
        kind, n, p = param.split(":")
        spec = {"generator": {"kind": kind, "n": int(n), "edge_param": float(p)}, "model": "dmnai"}
        specs.append(_write(tmp_path / f"s{i}.json", json.dumps(spec)))
    ref = _write(tmp_path / "ref.csv", "node,topic,stance\n0,0,1\n")
    assert main(["compare", "--spec-a", specs[0], "--spec-b", specs[1], "--reference", ref,
                 "--out", str(tmp_path / "c")]) == 2
    assert "different graphs" in capsys.readouterr().err


def test_bad_inputs_exit_nonzero(tmp_path):
    assert main(["simulate", "--graph", str(tmp_path / "missing.txt"), "--out", str(tmp_path / "o")]) != 0
    bad = _write(tmp_path / "bad.txt", "a b c\n")
    assert main(["simulate", "--graph", bad, "--out", str(tmp_path / "o")]) != 0
    assert main(["simulate", "--generate", "random:10:0.1", "--r1", "3", "--out", str(tmp_path / "o")]) != 0
    assert not os.path.exists(tmp_path / "o")
