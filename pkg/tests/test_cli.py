import json
import subprocess
import sys

import pytest

from quantcons.cli import main
from quantcons.experiments import (
    EXAMPLE_TABLE,
    ExperimentConfig,
    replay_example,
    run_batch,
    run_single,
    series_csv,
)


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_replay_default(capsys):
    assert main([]) == 0
    out, err = capsys.readouterr()
    assert "PASS" in err and "11/2" in err
    assert " v4   11   2   11    2   11 / 2" in out


def test_replay_remark_priority_file(tmp_path, capsys):
    pf = _write(tmp_path / "p.txt", "1 3 0\n1 4 1\n2 1 0\n3 1 0\n3 4 1\n4 2 0\n")
    assert main(["--priorities-file", pf]) == 0
    err = capsys.readouterr().err
    assert "PASS" in err and "22/4" in err and "alpha = 1" in err


def test_replay_json(tmp_path):
    out = tmp_path / "r.json"
    assert main(["--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["mode"] == "replay" and doc["problems"] == [] and doc["alpha"] == 2


def test_replay_corrupted_fixture_is_located():
    bad = [list(r) for r in EXAMPLE_TABLE]
    bad[2][3] = (11, 2, 10, 2)
    _, problems = replay_example(fixture=bad)
    assert "k=2 v4 y_s: got 11, expected 10" in problems
    assert any(p.startswith("k=2 v4 q_s") for p in problems)


def test_single_ring(tmp_path, capsys):
    gf = _write(tmp_path / "ring.txt", "3\n1 2\n2 3\n3 1\n")
    assert main(["--mode", "single", "--graph-file", gf, "--values", "1,2,3", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["exact"] and doc["average"] == "6/3"
    assert all(n["y_s"] * 3 == n["z_s"] * 6 for n in doc["nodes"])


def test_single_one_node(capsys):
    assert main(["--mode", "single", "--nodes", "1", "--values", "7", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["converged_round"] == 0 and doc["nodes"][0]["q_s"] == "7/1"


def test_single_two_nodes_hand_trace(tmp_path, capsys):
    # v1 adopts (10,1) and ships (0,1) in round 0; v2 merges to (10,2) in
    # round 1; v1 adopts it in round 2; v2 hears the echo in round 3.
    gf = _write(tmp_path / "k2.txt", "2\n1 2\n2 1\n")
    assert main(["--mode", "single", "--graph-file", gf, "--values", "0,10", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["alpha"] == 1 and doc["converged_round"] == 3
    assert [(n["y_s"], n["z_s"]) for n in doc["nodes"]] == [(10, 2), (10, 2)]
    assert [n["tx_count"] for n in doc["nodes"]] == [4, 2]
    assert [n["comp_count"] for n in doc["nodes"]] == [3, 4]


def test_single_trace_and_csv(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    csvp = tmp_path / "s.csv"
    args = ["--mode", "single", "--nodes", "8", "--edge-prob", "0.4", "--seed", "3",
            "--trace", str(trace), "--series-csv", str(csvp)]
    assert main(args) == 0
    recs = [json.loads(l) for l in trace.read_text().splitlines()]
    assert recs[0]["kind"] == "broadcast" and recs[0]["round"] == 0
    assert {r["kind"] for r in recs} <= {"broadcast", "directed"}
    header = csvp.read_text().splitlines()[0]
    assert header.startswith("round,")
    assert "converged_round" in capsys.readouterr().out


def test_batch_of_one_matches_single():
    cfg = ExperimentConfig(mode="batch", nodes=10, runs=1, seed=4, value_sum=50, fresh_values=True)
    batch = run_batch(cfg)
    s = batch.runs[0]
    assert batch.transmissions == {"min": s.total_transmissions, "max": s.total_transmissions,
                                   "mean": s.total_transmissions}
    single = ExperimentConfig(mode="single", nodes=10, seed=s.seed, value_sum=50)
    report, _ = run_single(single)
    assert report.converged_round == s.converged_round
    assert report.total_transmissions == s.total_transmissions


def test_batch_output_deterministic(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["--mode", "batch", "--runs", "15", "--seed", "9", "--value-sum", "214",
                     "--out", str(p), "--format", "json"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    assert len(doc["runs"]) == 15 and all(r["final_q"].split("/")[0] for r in doc["runs"])


def test_batch_workers_match_serial():
    cfg = ExperimentConfig(mode="batch", nodes=12, runs=6, seed=2)
    par = ExperimentConfig(mode="batch", nodes=12, runs=6, seed=2, workers=2)
    assert run_batch(cfg).to_dict() == run_batch(par).to_dict()


def test_series_csv_pads():
    text = series_csv({"a": [1, 2, 3], "b": [4]})
    assert text.splitlines() == ["round,a,b", "0,1,4", "1,2,", "2,3,"]


@pytest.mark.parametrize(
    "args",
    [
        ["--mode", "single", "--nodes", "3", "--values", "1,2"],
        ["--mode", "single", "--graph-file", "/nonexistent/g.txt"],
        ["--mode", "batch", "--runs", "0"],
        ["--mode", "single", "--value-range", "5:1"],
        ["--mode", "single", "--nodes", "4", "--value-range", "0:1", "--value-sum", "9"],
    ],
)
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "configuration error" in capsys.readouterr().err


def test_bad_priority_file_exit_2(tmp_path):
    pf = _write(tmp_path / "p.txt", "1 2 0\n")
    assert main(["--priorities-file", pf]) == 2


def test_budget_exhaustion_exit_1():
    assert main(["--mode", "single", "--nodes", "10", "--edge-prob", "0.3", "--max-rounds", "1"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "quantcons"], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stderr
