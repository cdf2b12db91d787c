import csv
import json
from collections import Counter
from fractions import Fraction as F

import pytest

from hstdelay import fileformat as ff
from hstdelay.cli import main
from hstdelay.generate import generate, generate_json
from hstdelay.oracle import opt_grid
from hstdelay.pipeline import run_algorithm
from hstdelay.requests import InstanceError, check_facility_tree
from hstdelay.report import csv_columns


def _gen(tmp_path, name="i.json", **kw):
    args = {"kind": "random-hst", "algo": "fl-deadline", "n": "8", "requests": "10", "seed": "1",
            "profile": "deadline-uniform"}
    args.update({k: str(v) for k, v in kw.items()})
    out = tmp_path / name
    argv = ["gen", "--out", str(out)]
    for k, v in args.items():
        argv += [f"--{k}", v]
    assert main(argv) == 0
    return out


def test_gen_parses_and_validates(tmp_path):
    path = _gen(tmp_path)
    inst = ff.load_instance(path)
    assert inst.problem == "fl-deadline" and len(inst.requests) == 10
    assert len(inst.tree.leaves) == 8
    check_facility_tree(inst.tree, inst.f)


def test_gen_is_byte_identical(tmp_path):
    a = _gen(tmp_path, "a.json").read_bytes()
    b = _gen(tmp_path, "b.json").read_bytes()
    assert a == b


def test_bursty_profile_puts_two_or_more_requests_per_leaf():
    for seed in range(30):
        inst, _ = generate("random-hst", "fl-delay", 6, 9, seed, "bursty-coalitions")
        counts = Counter(q.location for q in inst.requests)
        assert all(c >= 2 for c in counts.values())


def test_unsupported_combination_exits_with_an_error(tmp_path, capsys):
    with pytest.raises(InstanceError):
        generate("random-hst", "fl-delay", 4, 4, 0, "deadline-uniform")
    assert main(["gen", "--kind", "random-tree", "--problem", "osd", "--profile", "linear-slopes"]) == 2
    assert "does not generate" in capsys.readouterr().err


def test_instance_round_trip_is_lossless():
    for kind, problem, profile in [("random-euclidean", "osd", "linear-slopes"),
                                   ("random-hst", "fl-deadline", "deadline-uniform"),
                                   ("random-tree", "mad", "bursty-coalitions")]:
        inst, block = generate(kind, problem, 5, 6, 2, profile)
        doc = ff.instance_to_json(inst, block)
        again = ff.instance_from_json(json.loads(ff.dumps(doc)))
        assert ff.dumps(ff.instance_to_json(again, block)) == ff.dumps(doc)
        assert [(q.id, q.location, q.release, q.delay) for q in again.requests] == \
               [(q.id, q.location, q.release, q.delay) for q in inst.requests]


def test_trace_and_solution_round_trip():
    inst, _ = generate("random-hst", "osd", 3, 4, 5, "linear-slopes")
    result = run_algorithm(inst, "osd", 5)
    doc = ff.trace_to_json(result.trace)
    assert ff.trace_to_json(ff.trace_from_json(json.loads(ff.dumps(doc)))) == doc
    sol = opt_grid(inst)
    sdoc = ff.solution_to_json(sol)
    assert ff.solution_to_json(ff.solution_from_json(json.loads(ff.dumps(sdoc)))) == sdoc


def test_floats_in_files_are_rejected():
    doc = generate_json("random-hst", "mad", 3, 2, 0, "linear-slopes")
    doc["requests"][0]["release"] = 0.5
    with pytest.raises(InstanceError):
        ff.instance_from_json(doc)


def test_run_on_a_tree_skips_embedding(tmp_path):
    inst = ff.load_instance(_gen(tmp_path))
    assert run_algorithm(inst, "fl-deadline", 0).embedding is None


def test_run_writes_report_and_trace(tmp_path):
    path = _gen(tmp_path, kind="random-euclidean", n=5, requests=4)
    out, trace = tmp_path / "r.csv", tmp_path / "t.json"
    assert main(["run", "--instance", str(path), "--algo", "fl-deadline", "--seed", "3", "--feas", "exact",
                 "--out", str(out), "--trace", str(trace)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1 and list(rows[0]) == csv_columns()
    assert rows[0]["accountant_agrees"] == "true" and rows[0]["checks_ok"] == "true"
    assert F(rows[0]["alg_total_exact"]) == F(rows[0]["alg_buy_exact"]) + F(rows[0]["alg_connect_exact"])
    assert json.loads(trace.read_text())["algorithm"] == "fl-deadline"


def test_run_exits_nonzero_when_a_bound_fails(tmp_path):
    path = _gen(tmp_path)
    inst = ff.load_instance(path)
    # an impossible comparator: claims to serve everything for free
    fake = {"problem": "fl-deadline", "openings": [], "transmissions": [], "moves": [], "start": None,
            "assignments": {str(q.id): ["0", q.location] for q in inst.requests},
            "cost": {"buy": "0", "connect": "0", "delay": "0"}}
    sol = tmp_path / "fake.json"
    sol.write_text(json.dumps(fake))
    assert main(["run", "--instance", str(path), "--algo", "fl-deadline", "--solution", str(sol),
                 "--out", str(tmp_path / "r.csv")]) == 1


def test_embed_then_run(tmp_path):
    path = _gen(tmp_path, kind="random-euclidean", algo="mad", profile="linear-slopes", n=5, requests=4)
    tree_path = tmp_path / "tree.json"
    assert main(["embed", "--instance", str(path), "--seed", "2", "--out", str(tree_path)]) == 0
    assert ff.load_instance(tree_path).tree is not None
    assert main(["oracle", "--instance", str(tree_path), "--mode", "grid", "--out", str(tmp_path / "s.json")]) == 0
    assert main(["run", "--instance", str(tree_path), "--algo", "mad", "--solution", str(tmp_path / "s.json"),
                 "--format", "json", "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())[0]["kw_vs_D_feas_ok"] == "true"


def test_verify_preflow_on_a_passing_instance(tmp_path, capsys):
    path = _gen(tmp_path, n=3, requests=5)
    assert main(["verify-preflow", "--instance", str(path), "--dump", str(tmp_path / "g.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum(line.endswith(": ok") for line in lines) == 8
    assert json.loads((tmp_path / "g.json").read_text())["nodes"]


def test_bench_of_100_trials_is_deterministic(tmp_path):
    argv = ["bench", "--algo", "fl-deadline", "--kind", "random-hst", "--profile", "deadline-uniform",
            "--n", "4", "--requests", "5", "--trials", "100", "--seed", "42"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--no-figures"]) == 0
    rows = list(csv.DictReader(a.open()))
    assert len(rows) == 100
    assert [int(r["trial_seed"]) for r in rows] == [42 ^ i for i in range(100)]
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.slack.png").stat().st_size > 0 and (tmp_path / "a.costs.png").exists()
    assert not (tmp_path / "b.slack.png").exists()


def test_parallel_bench_matches_serial(tmp_path):
    argv = ["bench", "--algo", "osd", "--kind", "random-euclidean", "--n", "5", "--requests", "4",
            "--trials", "4", "--seed", "9", "--no-figures"]
    assert main(argv + ["--out", str(tmp_path / "s.csv")]) == 0
    assert main(argv + ["--out", str(tmp_path / "p.csv"), "--jobs", "2"]) == 0
    assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "p.csv").read_bytes()
