import json

import jsonschema
import pytest
from click.testing import CliRunner

from zigzagfo import cli
from zigzagfo import rotgraph as rg
from zigzagfo import simplegraph as sg
from zigzagfo import structures as ss


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, args, env=None):
    res = runner.invoke(cli.main, [str(a) for a in args], env=env, catch_exceptions=False)
    return res


def record(res):
    rec = json.loads(res.output)
    jsonschema.validate(rec, cli.load_schema(rec["command"]))
    return rec


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("model1")
    res = CliRunner().invoke(cli.main, ["model", "--d", "2", "--depth", "1", "--seed", "0", "--out", str(out)])
    assert res.exit_code in (0, 1), res.output
    return out


# spectrum

def test_spectrum_k4_exhaustive(runner, tmp_path):
    p = tmp_path / "k4.rot"
    rg.save(rg.complete(4), p)
    rec = record(run(runner, ["spectrum", p, "--exhaustive-h"]))
    r = rec["result"]
    assert r["lambda"] == pytest.approx(1 / 3)
    assert r["cheeger_bound"] == pytest.approx(1.0)
    assert r["h"] == pytest.approx(2.0) and r["bound_holds"]
    assert rec["ok"] and rec["config"]["exhaustive_h"]


def test_spectrum_c4_bipartite(runner, tmp_path):
    p = tmp_path / "c4.rot"
    rg.save(rg.cycle(4), p)
    rec = record(run(runner, ["spectrum", p]))
    assert rec["result"]["bipartite"] is True


def test_spectrum_empty_file(runner, tmp_path):
    p = tmp_path / "empty.rot"
    p.write_text("")
    res = run(runner, ["spectrum", p])
    assert res.exit_code != 0
    rec = record(res)
    assert not rec["ok"] and rec["error"]


def test_csv_twelve_digits(runner, tmp_path):
    p = tmp_path / "k4.rot"
    rg.save(rg.complete(4), p)
    res = run(runner, ["spectrum", p, "--format", "csv"])
    rows = dict(line.split(",", 1) for line in res.output.strip().splitlines()[1:])
    assert rows["result.lambda"] == "0.333333333333"
    assert rows["config.format"] == "csv"


def test_text_format(runner, tmp_path):
    p = tmp_path / "k4.rot"
    rg.save(rg.complete(4), p)
    res = run(runner, ["spectrum", p, "--format", "text"])
    assert "result.degree: 3" in res.output.splitlines()


# family

def test_family_sizes_and_determinism(runner, tmp_path):
    out = tmp_path / "fam"
    first = run(runner, ["family", "--d", 2, "--depth", 2, "--seed", 5, "--out", out])
    files = {p.name: p.read_bytes() for p in out.iterdir()}
    second = run(runner, ["family", "--d", 2, "--depth", 2, "--seed", 5, "--out", out])
    assert first.output == second.output
    assert files == {p.name: p.read_bytes() for p in out.iterdir()}
    rec = record(first)
    assert [(lv["n"], lv["degree"]) for lv in rec["result"]["levels"]] == [(16, 4), (256, 4)]
    assert all(lv["inequality_holds"] for lv in rec["result"]["levels"])
    assert rg.load(out / "G2.rot").n == 256
    assert first.exit_code == 0


def test_family_requires_seed(runner, tmp_path):
    res = runner.invoke(cli.main, ["family", "--out", str(tmp_path)])
    assert res.exit_code == 2 and "--seed" in res.output


def test_family_odd_base_fails(runner, tmp_path):
    res = run(runner, ["family", "--d", 3, "--depth", 1, "--seed", 0, "--out", tmp_path])
    assert res.exit_code == 2
    assert record(res)["error"]


# model and check

def test_model_depth2(runner, tmp_path):
    res = run(runner, ["model", "--d", 2, "--depth", 2, "--seed", 0, "--out", tmp_path])
    rec = record(res)
    r = rec["result"]
    assert r["n"] == 273
    assert r["check"]["ok"] and r["lambda_U"] < 1
    rep = r["report"]
    assert rep["tree_ok"] and rep["size_ok"] and all(rep["level_iso"])
    # exit status follows the combined verdict, degree law included
    assert res.exit_code == (0 if rec["ok"] else 1)
    assert rec["ok"] == bool(rep["degree_ok"])


def test_model_rejects_depth_zero(runner, tmp_path):
    res = run(runner, ["model", "--depth", 0, "--seed", 0, "--out", tmp_path])
    assert res.exit_code == 2 and "depth" in record(res)["error"]


def test_check_model(runner, model_dir):
    res = run(runner, ["check", model_dir / "model.struct", "--base", model_dir / "H.rot"])
    assert res.exit_code == 0 and record(res)["result"]["ok"]


def test_check_literal_fails(runner, model_dir):
    res = run(runner, ["check", model_dir / "model.struct", "--base", model_dir / "H.rot", "--literal"])
    assert res.exit_code == 1


def test_check_corrupted_names_element(runner, model_dir, tmp_path):
    a = ss.load(model_dir / "model.struct")
    name = ss.f_name(2, 2)
    t = sorted(a.tuples(name))[0]
    bad = tmp_path / "bad.struct"
    ss.save(a.remove(name, t), bad)
    res = run(runner, ["check", bad, "--base", model_dir / "H.rot", "--part", "tree"])
    assert res.exit_code == 1
    rec = record(res)
    assert t[1] in rec["result"]["witness"]["roots"]


# encode and decode

def test_encode_roundtrip(runner, model_dir, tmp_path):
    out = tmp_path / "enc.graph"
    prov = tmp_path / "prov.json"
    res = run(runner, ["encode", model_dir / "model.struct", "--out", out, "--provenance", prov, "--roundtrip"])
    rec = record(res)
    r = rec["result"]
    assert r["roundtrip"] is True
    assert r["original_vertices_detected"] == 17 and r["original_vertices_match"]
    assert res.exit_code == 0
    assert json.loads(prov.read_text())["original_vertices"] == list(range(17))


def test_encode_mem_cap(runner, model_dir, tmp_path):
    res = run(runner, ["encode", model_dir / "model.struct", "--out", tmp_path / "x.graph"],
              env={"ELL_MEM_CAP": "1"})
    rec = record(res)
    assert res.exit_code == 2 and "cap" in rec["error"]
    assert rec["config"]["ELL_MEM_CAP"] == "1"


def test_decode_small(runner, tmp_path):
    from zigzagfo import gadgets as gd
    sig = ss.signature_for(2)
    a = ss.Structure(sig, 3, {"R": {(0, 0)}, ss.e_name(1, 2, 2): {(1, 2)}, ss.e_name(2, 1, 2): {(2, 1)}})
    g = tmp_path / "small.graph"
    sg.save(gd.encode(a).graph, g)
    out = tmp_path / "back.struct"
    rec = record(run(runner, ["decode", g, "--out", out]))
    assert rec["ok"] and rec["result"]["tuples"] == 3
    assert ss.load(out) == a


def test_decode_malformed(runner, tmp_path):
    g = tmp_path / "tri.graph"
    sg.save(sg.SimpleGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)]), g)
    res = run(runner, ["decode", g, "--out", tmp_path / "x.struct", "--d", 2])
    assert res.exit_code == 2 and record(res)["error"]


# testers

def _graph_file(tmp_path, name, n, edges):
    p = tmp_path / name
    sg.save(sg.SimpleGraph.from_edges(n, edges), p)
    return p


def _k4s(m, extra=0):
    edges = []
    for i in range(m):
        b = 4 * i
        edges += [(b + x, b + y) for x in range(4) for y in range(x + 1, 4)]
    return 4 * m + extra, edges


def test_regularity_parity_gate(runner, tmp_path):
    n, e = _k4s(5, extra=1)
    p = _graph_file(tmp_path, "k4p1.graph", n, e)
    rec = record(run(runner, ["test", p, "--tester", "regularity", "--epsilon", 0.5, "--seed", 1, "--trials", 3]))
    r = rec["result"]
    assert r["rejects"] == 3 and r["max_queries"] == 0


def test_freeness_trials_accept(runner, tmp_path):
    n = 60
    p = _graph_file(tmp_path, "cyc.graph", n, [(i, (i + 1) % n) for i in range(n)])
    tau = _graph_file(tmp_path, "path.graph", 2, [(0, 1)])
    args = ["test", p, "--tester", "freeness", "--tau-graph", tau, "--epsilon", 0.5, "--seed", 2,
            "--trials", 50, "--override-lambda", 0.4, "--override-n0", 5]
    first = run(runner, args)
    rec = record(first)
    assert rec["result"]["accepts"] == 50 and len(rec["result"]["trials"]) == 50
    assert run(runner, args).output == first.output


def test_substructure_cli(runner, tmp_path):
    n, e = 9, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (6, 7), (7, 8), (6, 8)]
    p = _graph_file(tmp_path, "tris.graph", n, e)
    pat = _graph_file(tmp_path, "tri.graph", 3, [(0, 1), (1, 2), (0, 2)])
    rec = record(run(runner, ["test", p, "--tester", "substructure", "--pattern", pat, "--epsilon", 1.0,
                              "--seed", 0, "--no-per-trial"]))
    assert rec["result"]["rejects"] == 1 and "trials" not in rec["result"]


def test_test_needs_pattern(runner, tmp_path):
    p = _graph_file(tmp_path, "e.graph", 2, [(0, 1)])
    res = run(runner, ["test", p, "--tester", "substructure", "--epsilon", 0.5, "--seed", 0])
    assert res.exit_code == 2 and "pattern" in record(res)["error"]


def test_test_rejects_zero_epsilon(runner, tmp_path):
    p = _graph_file(tmp_path, "e.graph", 2, [(0, 1)])
    res = run(runner, ["test", p, "--tester", "freeness", "--epsilon", 0, "--seed", 0])
    assert res.exit_code == 2


# witness

def test_witness_small_is_deterministic(runner):
    args = ["witness", "--d", 2, "--depth", 2, "--seed", 0]
    a = run(runner, args)
    b = run(runner, args)
    assert a.output == b.output and a.exit_code == 0
    r = record(a)["result"]
    assert r["n"] == 273 and r["padding"] == 273 - 16 * 17
    assert r["threshold"] == pytest.approx(25 * 273 / 576)
    lo, hi = r["sampling_distance"]["interval"]
    assert 0 <= lo <= hi <= lo + 2 ** -3 + sum(2 ** -k for k, x in enumerate(r["sampling_distance"]["per_radius"])
                                                 if x is None) + 1e-12


def test_witness_rejects_odd_base(runner):
    res = run(runner, ["witness", "--d", 3, "--depth", 2, "--seed", 0])
    assert res.exit_code == 2


def test_witness_rejects_unsupported_d(runner):
    res = run(runner, ["witness", "--d", 4, "--depth", 2, "--seed", 0])
    assert res.exit_code == 2
