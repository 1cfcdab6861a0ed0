import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from jsonschema import Draft7Validator

from diverse_cq import cli

Q1 = "Q1(x,y) <- R(x,z), R(z,y)."
IDENT = "A(x,y) <- R(x,y)."

SCHEMA = json.loads(
    (Path(cli.__file__).parent / "report_schema.json").read_text())
VALIDATOR = Draft7Validator(SCHEMA)


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    d1 = root / "d1"
    d1.mkdir()
    (d1 / "schema.txt").write_text("R/2\n")
    (d1 / "R.csv").write_text("a,a\na,b\nb,a\n")

    d3 = root / "d3"
    d3.mkdir()
    (d3 / "schema.txt").write_text("R/2\n")
    (d3 / "R.csv").write_text("a,b\na,c\n")

    empty = root / "empty"
    empty.mkdir()
    (empty / "schema.txt").write_text("R/2\n")
    (empty / "R.csv").write_text("")

    nums = root / "nums"
    nums.mkdir()
    (nums / "schema.txt").write_text("N/2\n")
    (nums / "N.csv").write_text("0,0\n1,0\n9,9\n")

    (root / "w.txt").write_text("# heavier third value\nc@2,3\n")
    (root / "ew.txt").write_text("a,5\n")
    (root / "m.csv").write_text("a,b,c\n0,1,2\n1,0,1\n2,1,0\n")
    (root / "tree.json").write_text(json.dumps(
        {"edge_length": 0, "children": [
            {"edge_length": 1, "children": [{"edge_length": 1, "label": "a"},
                                            {"edge_length": 1, "label": "b"}]},
            {"edge_length": 2, "label": "c"}]}))
    (root / "maw.json").write_text(json.dumps(
        {"universe": ["x", "y"], "lambda": [{"set": ["x", "y"], "weight": 3}]}))
    return root


def run(capsys, argv):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, argv):
    code, out, err = run(capsys, argv)
    assert code == 0, err
    doc = json.loads(out)
    errors = list(VALIDATOR.iter_errors(doc))
    assert not errors, [e.message for e in errors]
    return doc


def test_eval_counts_and_dumps(capsys, work):
    doc = report(capsys, ["eval", "--data", str(work / "d1"), "--query", Q1, "--dump"])
    assert doc["command"] == "eval"
    assert doc["payload"]["count"] == 4
    assert doc["payload"]["answers"] == [["a", "a"], ["a", "b"], ["b", "a"], ["b", "b"]]
    assert ["a", "a"] in doc["payload"]["answers"] and ["b", "b"] in doc["payload"]["answers"]
    assert set(doc["inputs"]) == {"data/schema.txt", "data/R.csv"}


def test_eval_empty_database(capsys, work):
    doc = report(capsys, ["eval", "--data", str(work / "empty"), "--query", Q1])
    assert doc["payload"]["count"] == 0


def test_eval_reads_query_from_file(capsys, work):
    qfile = work / "q.txt"
    qfile.write_text(Q1 + "\n")
    doc = report(capsys, ["eval", "--data", str(work / "d1"), "--query", str(qfile)])
    assert doc["payload"]["count"] == 4
    assert "query" in doc["inputs"]


def test_malformed_query_exits_2_with_position(capsys, work):
    code, _, err = run(capsys, ["eval", "--data", str(work / "d1"),
                                "--query", "Q1(x <- R(x)."])
    assert code == 2
    assert "at position" in err


def test_missing_inputs_exit_2(capsys, work):
    assert run(capsys, ["eval", "--query", Q1])[0] == 2
    assert run(capsys, ["eval", "--data", str(work / "d1")])[0] == 2
    assert run(capsys, ["eval", "--data", str(work / "nope"), "--query", Q1])[0] == 2


def test_threads_env(capsys, work, monkeypatch):
    monkeypatch.setenv("DIVERSE_CQ_THREADS", "4")
    doc = report(capsys, ["eval", "--data", str(work / "d1"), "--query", Q1])
    assert doc["threads"] == 4
    monkeypatch.setenv("DIVERSE_CQ_THREADS", "zero")
    assert run(capsys, ["eval", "--data", str(work / "d1"), "--query", Q1])[0] == 2
    monkeypatch.setenv("DIVERSE_CQ_THREADS", "0")
    assert run(capsys, ["eval", "--data", str(work / "d1"), "--query", Q1])[0] == 2


def test_diversify_exact_identity_elements(capsys, work):
    doc = report(capsys, ["diversify", "--data", str(work / "d1"), "--query", IDENT,
                          "-k", "3", "--volume", "elem", "--mode", "exact"])
    assert doc["payload"]["total"] == "2"
    assert doc["payload"]["optimal"] is True


def test_diversify_k_zero(capsys, work):
    doc = report(capsys, ["diversify", "--data", str(work / "d1"), "--query", IDENT,
                          "-k", "0", "--volume", "elem"])
    assert doc["payload"]["selected"] == []
    assert doc["payload"]["total"] == "0"


def test_diversify_weighted_positions(capsys, work):
    doc = report(capsys, ["diversify", "--data", str(work / "d3"), "--query", IDENT,
                          "-k", "2", "--volume", "pos-w", "--mode", "exact",
                          "--measure", f"weighted:{work / 'w.txt'}:default=1"])
    assert doc["payload"]["total"] == "5"
    assert "measure" in doc["inputs"]


def test_diversify_weighted_elements(capsys, work):
    doc = report(capsys, ["diversify", "--data", str(work / "d3"), "--query", IDENT,
                          "-k", "1", "--volume", "elem-w",
                          "--measure", f"weighted:{work / 'ew.txt'}"])
    assert doc["payload"]["total"] == "6"  # a weighs 5, partner value 1


def test_diversify_lazy_matches_plain(capsys, work):
    plain = report(capsys, ["diversify", "--data", str(work / "d1"), "--query", IDENT,
                            "-k", "2", "--volume", "pos"])
    lazy = report(capsys, ["diversify", "--data", str(work / "d1"), "--query", IDENT,
                           "-k", "2", "--volume", "pos", "--lazy"])
    assert plain["payload"]["selected"] == lazy["payload"]["selected"]
    assert plain["payload"]["gains"] == lazy["payload"]["gains"]


def test_diversify_combined_auto(capsys, work):
    doc = report(capsys, ["diversify", "--data", str(work / "d1"), "--query", Q1,
                          "-k", "2", "--mode", "greedy-combined"])
    assert doc["payload"]["volume"] == "provenance"
    assert doc["payload"]["total"] == "3"
    assert doc["payload"]["selected"][0] == ["a", "a"]


def test_diversify_bad_flags_exit_2(capsys, work):
    base = ["diversify", "--data", str(work / "d1"), "--query", IDENT, "-k", "1"]
    assert run(capsys, base + ["--volume", "warp"])[0] == 2
    assert run(capsys, base + ["--volume", "ball:r=fast"])[0] == 2
    assert run(capsys, base + ["--volume", "pos-w"])[0] == 2  # no --measure
    assert run(capsys, base + ["--volume", "pos-w", "--measure", "flat:x"])[0] == 2
    assert run(capsys, base + ["--volume", "elem", "--mode", "exact",
                               "--max-subsets", "1"])[0] == 2


def test_diversify_ball_volume(capsys, work):
    doc = report(capsys, ["diversify", "--data", str(work / "nums"),
                          "--query", "P(x,y) <- N(x,y).", "-k", "2",
                          "--volume", "ball:r=1", "--mc-samples", "2000"])
    assert len(doc["payload"]["selected"]) == 2
    assert float(doc["payload"]["total"]) > 0


def test_compare_single_answer(capsys, work):
    doc = report(capsys, ["compare", "--data", str(work / "d3"), "--query",
                          "B(x) <- R(x,y).", "-k", "2", "--volume", "elem",
                          "--distance", "hamming"])
    methods = doc["payload"]["methods"]
    assert doc["payload"]["answer_count"] == 1
    for m in methods.values():
        assert m["totals"]["sum"] == "0"
        assert m["totals"]["min"] == "0"
        assert m["totals"]["weitzman"] == "0"
        assert m["totals"]["volume"] == "1"  # the ball of the one answer
    assert doc["payload"]["anomalies"]["min_monotonicity"] is None


def test_compare_volume_monotone_in_k(capsys, work):
    totals = []
    for k in (1, 2, 3):
        doc = report(capsys, ["compare", "--data", str(work / "d1"), "--query", IDENT,
                              "-k", str(k), "--volume", "pos",
                              "--distance", "hamming"])
        totals.append(Fraction(doc["payload"]["methods"]["volume"]["totals"]["volume"]))
    assert totals[0] <= totals[1] <= totals[2]


def test_compare_matrix_distance(capsys, work):
    doc = report(capsys, ["compare", "--data", str(work / "d3"), "--query",
                          "B(y) <- R(x,y).", "-k", "2", "--volume", "elem",
                          "--distance", f"matrix:{work / 'm.csv'}"])
    assert doc["payload"]["methods"]["sum"]["totals"]["sum"] != "0"
    assert "distance" in doc["inputs"]


def test_compare_matrix_needs_single_column_answers(capsys, work):
    code, _, err = run(capsys, ["compare", "--data", str(work / "d1"), "--query",
                                IDENT, "-k", "2", "--volume", "elem",
                                "--distance", f"matrix:{work / 'm.csv'}"])
    assert code == 2
    assert "single-column" in err


def test_convert_ultrametric(capsys, work):
    doc = report(capsys, ["convert", "--ultrametric", str(work / "tree.json")])
    payload = doc["payload"]
    assert payload["check"]["verdict"] == "PASS"
    assert payload["radius"] == "2"
    assert payload["leaves"] == ["a", "b", "c"]


def test_convert_single_weight(capsys, work):
    doc = report(capsys, ["convert", "--multiattr", str(work / "maw.json")])
    payload = doc["payload"]
    assert payload["check"]["verdict"] == "PASS"
    assert payload["weights"] == [{"set": ["x", "y"], "weight": "3"}]
    assert payload["balls"]["x"] == payload["balls"]["y"]


def test_convert_volume_dump_round_trip(capsys, work):
    doc = report(capsys, ["convert", "--volume-dump", "--data", str(work / "d3"),
                          "--query", IDENT, "--volume", "elem"])
    assert doc["payload"]["check"]["verdict"] == "PASS"
    assert doc["payload"]["check"]["subsets_checked"] == 3


def test_convert_requires_exactly_one_source(capsys, work):
    assert run(capsys, ["convert"])[0] == 2
    assert run(capsys, ["convert", "--ultrametric", str(work / "tree.json"),
                        "--multiattr", str(work / "maw.json")])[0] == 2


def test_bench_small(capsys):
    doc = report(capsys, ["bench", "--nodes", "6", "--edges", "12",
                          "--path-length", "2", "-k", "2", "--cap", "50"])
    payload = doc["payload"]
    assert payload["combined"]["rounds"] <= 2
    assert payload["materialize_then_greedy"]["answers_enumerated"] <= 50
    assert payload["combined"]["materialized_answers"] == 0


def test_bench_rejects_impossible_graphs(capsys):
    assert run(capsys, ["bench", "--nodes", "2", "--edges", "100"])[0] == 2


def test_payloads_are_rerun_identical(capsys, work):
    argvs = [
        ["eval", "--data", str(work / "d1"), "--query", Q1, "--dump"],
        ["diversify", "--data", str(work / "d1"), "--query", Q1, "-k", "2",
         "--volume", "provenance"],
        ["bench", "--nodes", "6", "--edges", "10", "--path-length", "2",
         "-k", "2", "--cap", "30", "--seed", "3"],
    ]
    for argv in argvs:
        a = report(capsys, argv)["payload"]
        b = report(capsys, argv)["payload"]
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_seed_changes_bench_payload(capsys):
    base = ["bench", "--nodes", "8", "--edges", "20", "--path-length", "2", "-k", "2",
            "--cap", "30"]
    a = report(capsys, base)["payload"]
    b = report(capsys, base + ["--seed", "9"])["payload"]
    assert a != b


def test_console_entry_point(work):
    proc = subprocess.run(
        [sys.executable, "-m", "diverse_cq.cli", "eval",
         "--data", str(work / "d1"), "--query", Q1],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["payload"]["count"] == 4


def test_argparse_errors_map_to_exit_2(capsys, work):
    assert cli.main(["diversify", "--data", str(work / "d1"), "--query", IDENT]) == 2
    capsys.readouterr()
