"""Command-line interface. Every command prints one record holding the
resolved configuration and its result; the exit code is 0 iff every
requested verification passed."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import gadgets as gd
from . import rotgraph as rg
from . import simplegraph as sg
from . import structures as ss
from . import testing as ts
from .folagic import PARTS, check_zigzag

FORMATS = ("json", "csv", "text")


# output

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Path):
        return str(x)
    return x


def _flatten(prefix: str, x, out: list) -> None:
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(x, list) and any(isinstance(v, (dict, list)) for v in x):
        for i, v in enumerate(x):
            _flatten(f"{prefix}.{i}", v, out)
    elif isinstance(x, list):
        out.append((prefix, ";".join(_cell(v) for v in x)))
    else:
        out.append((prefix, _cell(x)))


def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    if v is None:
        return ""
    return str(v)


def render(record: dict, fmt: str) -> str:
    record = _plain(record)
    if fmt == "json":
        return json.dumps(record, indent=2, sort_keys=True)
    rows: list = []
    _flatten("", record, rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue().rstrip("\n")
    return "\n".join(f"{k}: {v}" for k, v in rows)


def emit(command: str, config: dict, result: dict, ok: bool, fmt: str) -> None:
    record = {"command": command, "config": dict(config, command=command, format=fmt), "ok": bool(ok),
              "result": result}
    click.echo(render(record, fmt))
    if not ok:
        sys.exit(1)


def fail(command: str, config: dict, message: str, fmt: str, code: int = 2) -> None:
    record = {"command": command, "config": dict(config, command=command, format=fmt), "ok": False,
              "error": message}
    click.echo(render(record, fmt))
    sys.exit(code)


def fmt_option(f):
    return click.option("--format", "fmt", type=click.Choice(FORMATS), default="json", show_default=True)(f)


def seed_option(f):
    return click.option("--seed", type=int, required=True, help="master seed (required)")(f)


def mem_cap_vertices(cap_vertices: int, d: int) -> int:
    """Tighten the vertex cap from ELL_MEM_CAP (MiB) at ~8(d+1) bytes a vertex."""
    raw = os.environ.get("ELL_MEM_CAP")
    if not raw:
        return cap_vertices
    mib = float(raw)
    return min(cap_vertices, int(mib * 2 ** 20 / (8 * (d + 1))))


def load_schema(command: str) -> dict:
    from importlib import resources
    return json.loads(resources.files("zigzagfo").joinpath("schemas", f"{command}.json").read_text())


def load_input(path: str) -> sg.SimpleGraph | ss.Structure:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
    if head and head[0] == "graph":
        return sg.load(path)
    if head and head[0] == "structure":
        return ss.load(path)
    raise click.BadParameter(f"{path}: expected a 'graph' or 'structure' file")


@click.group()
def main():
    """Zig-zag models, arrow encodings and bounded-degree testers."""


# spectrum

@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--exhaustive-h", is_flag=True, help="also compute exact expansion (n <= 24)")
@fmt_option
def spectrum(path, exhaustive_h, fmt):
    """Spectral report and Cheeger bound of a rotation graph file."""
    cfg = {"path": path, "exhaustive_h": exhaustive_h}
    try:
        g = rg.load(path)
    except (rg.RotationError, OSError) as exc:
        fail("spectrum", cfg, str(exc), fmt)
    rep = rg.spectrum(g)
    bound = g.degree * (1 - rep.lam) / 2
    result = dict(rep.as_dict(), n=g.n, degree=g.degree, cheeger_bound=bound)
    ok = True
    if exhaustive_h:
        cut = rg.expansion(g, "exhaustive")
        result["h"] = cut.h
        result["h_witness"] = list(cut.witness_set)
        result["bound_holds"] = cut.h >= bound - 1e-9
        ok = result["bound_holds"]
    emit("spectrum", cfg, result, ok, fmt)


# family

@main.command()
@click.option("--d", "D", type=int, default=2, show_default=True)
@click.option("--depth", "m", type=int, default=2, show_default=True)
@seed_option
@click.option("--trials", type=int, default=64, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--cap-tuples", type=int, default=rg.DEFAULT_SLOT_CAP, show_default=True)
@fmt_option
def family(D, m, seed, trials, out, cap_tuples, fmt):
    """Base graph H and the family G_1..G_m with a per-level lambda report."""
    cfg = {"D": D, "depth": m, "seed": seed, "trials": trials, "out": out, "cap_tuples": cap_tuples}
    try:
        h, lam_h = rg.random_regular_base(D, seed, trials)
        fam = rg.build_family(h, m, cap_slots=cap_tuples)
    except (rg.CapExceeded, ValueError) as exc:
        fail("family", cfg, str(exc), fmt)
    Path(out).mkdir(parents=True, exist_ok=True)
    rg.save(h, Path(out) / "H.rot")
    levels = []
    prev = None
    ok = True
    for k, g in enumerate(fam, start=1):
        rg.save(g, Path(out) / f"G{k}.rot")
        lam = rg.spectrum(g).lam
        if prev is None:
            target = lam_h ** 2
            holds = lam <= target + 1e-8
        else:
            target = prev ** 2 + lam_h
            holds = lam < target
        ok &= holds and g.n == D ** (4 * k) and g.degree == D * D
        levels.append({"level": k, "n": g.n, "degree": g.degree, "lambda": lam,
                       "bound": target, "inequality_holds": holds})
        prev = lam
    emit("family", cfg, {"lambda_H": lam_h, "levels": levels}, ok, fmt)


# model and check

def _model_checks(a: ss.Structure, h: rg.RotationGraph, fam, spectral: bool = True) -> tuple[dict, bool]:
    rep = ss.model_report(a, fam)
    chk = check_zigzag(a, h)
    out = {"report": rep.as_dict(), "check": chk.as_dict()}
    ok = rep.tree_ok and rep.size_ok and all(rep.level_iso) and rep.degree_ok and chk.ok
    if spectral:
        lam = rg.spectrum(ss.underlying_graph(a)).lam
        out["lambda_U"] = lam
        ok &= lam < 1
    return out, bool(ok)


@main.command()
@click.option("--d", "D", type=int, default=2, show_default=True)
@click.option("--depth", type=int, default=2, show_default=True)
@seed_option
@click.option("--trials", type=int, default=64, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--cap-tuples", type=int, default=ss.DEFAULT_TUPLE_CAP, show_default=True)
@fmt_option
def model(D, depth, seed, trials, out, cap_tuples, fmt):
    """Build the canonical model of the given depth and verify it."""
    cfg = {"D": D, "depth": depth, "seed": seed, "trials": trials, "out": out, "cap_tuples": cap_tuples}
    if depth < 1:
        fail("model", cfg, "depth must be at least 1", fmt)
    try:
        h, _ = rg.random_regular_base(D, seed, trials)
        fam = rg.build_family(h, depth)
        a = ss.build_model(h, depth, cap_tuples=cap_tuples)
    except (rg.CapExceeded, ValueError) as exc:
        fail("model", cfg, str(exc), fmt)
    Path(out).mkdir(parents=True, exist_ok=True)
    rg.save(h, Path(out) / "H.rot")
    ss.save(a, Path(out) / "model.struct")
    result, ok = _model_checks(a, h, fam)
    result["n"] = a.n
    result["tuples"] = a.tuple_count
    emit("model", cfg, result, ok, fmt)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--base", type=click.Path(exists=True, dir_okay=False), required=True, help="rotation graph H")
@click.option("--part", type=click.Choice(("all",) + tuple(PARTS)), default="all", show_default=True)
@click.option("--literal", is_flag=True, help="check the unrelativised sentence")
@fmt_option
def check(path, base, part, literal, fmt):
    """Check a structure file against the zig-zag sentence for H."""
    cfg = {"path": path, "base": base, "part": part, "literal": literal}
    try:
        a = ss.load(path)
        h = rg.load(base)
    except (ss.StructureError, rg.RotationError) as exc:
        fail("check", cfg, str(exc), fmt)
    res = check_zigzag(a, h, part, literal=literal)
    emit("check", cfg, res.as_dict(), res.ok, fmt)


# encode and decode

def _degree_hist(g: sg.SimpleGraph) -> dict:
    vals, cnts = np.unique(g.degrees(), return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, cnts)}


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--provenance", type=click.Path(dir_okay=False), default=None)
@click.option("--base", type=click.Path(exists=True, dir_okay=False), default=None,
              help="verify the input models the sentence for H first")
@click.option("--roundtrip", is_flag=True)
@click.option("--cap-vertices", type=int, default=gd.DEFAULT_VERTEX_CAP, show_default=True)
@fmt_option
def encode(path, out, provenance, base, roundtrip, cap_vertices, fmt):
    """Encode a model as a simple graph of arrow gadgets."""
    cfg = {"path": path, "out": out, "provenance": provenance, "base": base, "roundtrip": roundtrip,
           "cap_vertices": cap_vertices, "ELL_MEM_CAP": os.environ.get("ELL_MEM_CAP")}
    try:
        a = ss.load(path)
        h = rg.load(base) if base else None
        d = gd.structure_degree(a.sig.param)
        enc = gd.encode(a, h, cap_vertices=mem_cap_vertices(cap_vertices, d))
    except (ss.StructureError, rg.RotationError, gd.GadgetError, rg.CapExceeded, ValueError) as exc:
        fail("encode", cfg, str(exc), fmt)
    g = enc.graph
    sg.save(g, out)
    if provenance:
        enc.save_provenance(provenance)
    orig = gd.original_vertices(g)
    hist = _degree_hist(g)
    result = {
        "n": g.n, "edges": g.m, "d": enc.d, "arrows": len(enc.arrows), "arrow_size": enc.size,
        "degree_histogram": hist, "regular": list(hist) == [enc.d],
        "original_vertices_detected": int(orig.size),
        "original_vertices_match": orig.size == enc.n_original and bool((orig == np.arange(enc.n_original)).all()),
    }
    ok = result["original_vertices_match"]
    if roundtrip:
        try:
            back = gd.decode(g, enc.D)
            result["roundtrip"] = back == a
        except gd.GadgetError as exc:
            result["roundtrip"] = False
            result["roundtrip_error"] = str(exc)
        ok &= result["roundtrip"]
    emit("encode", cfg, result, ok, fmt)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--d", "D", type=int, default=None, help="structure parameter (inferred when omitted)")
@fmt_option
def decode(path, out, D, fmt):
    """Recover the structure from an arrow-gadget graph."""
    cfg = {"path": path, "out": out, "D": D}
    try:
        g = sg.load(path)
        a = gd.decode(g, D)
    except (sg.GraphFormatError, gd.GadgetError) as exc:
        fail("decode", cfg, str(exc), fmt)
    ss.save(a, out)
    emit("decode", cfg, {"n": a.n, "tuples": a.tuple_count, "D": a.sig.param}, True, fmt)


# testers

@main.command("test")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tester", type=click.Choice(("freeness", "regularity", "substructure")), required=True)
@click.option("--tau-graph", type=click.Path(exists=True, dir_okay=False), default=None,
              help="file holding the vertex whose r-type is tau (default: the input)")
@click.option("--tau-vertex", type=int, default=0, show_default=True)
@click.option("--pattern", type=click.Path(exists=True, dir_okay=False), default=None,
              help="forbidden substructure (graph or structure file)")
@click.option("--r", type=int, default=1, show_default=True)
@click.option("--d", "d", type=int, default=None, help="degree bound (default: input maximum)")
@click.option("--epsilon", type=float, required=True)
@seed_option
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--override-lambda", type=float, default=None)
@click.option("--override-n0", type=float, default=None)
@click.option("--per-trial/--no-per-trial", default=True, show_default=True)
@fmt_option
def test_cmd(path, tester, tau_graph, tau_vertex, pattern, r, d, epsilon, seed, trials,
             override_lambda, override_n0, per_trial, fmt):
    """Run independent tester executions and report accept/reject rates."""
    cfg = {"path": path, "tester": tester, "tau_graph": tau_graph, "tau_vertex": tau_vertex,
           "pattern": pattern, "r": r, "d": d, "epsilon": epsilon, "seed": seed, "trials": trials,
           "override_lambda": override_lambda, "override_n0": override_n0}
    try:
        obj = load_input(path)
        o = ts.Oracle(obj, d)
        cfg["d"] = o.d
        if tester == "substructure":
            if pattern is None:
                raise ValueError("--pattern is required for the substructure tester")
            pat = load_input(pattern)
            if isinstance(pat, sg.SimpleGraph):
                pat = graph_pattern(pat)

            def run(s):
                return ts.substructure_freeness_tester(o, pat, epsilon, s, n0=override_n0)
        else:
            src = load_input(tau_graph) if tau_graph else obj
            tau = ts.canonical_type(ts.ball(ts.Oracle(src), tau_vertex, r, cap=10 ** 6))
            fn = ts.freeness_tester if tester == "freeness" else ts.regularity_tester

            def run(s):
                return fn(o, tau, epsilon, s, lam=override_lambda, n0=override_n0)
        trials_out = []
        for row in ts.run_trials(run, trials, seed):
            trials_out.append(row)
            o.reset()
    except (ValueError, ts.OracleError, rg.CapExceeded) as exc:
        fail("test", cfg, str(exc), fmt)
    acc = sum(t["verdict"] == "accept" for t in trials_out)
    result = {"accept_rate": acc / trials, "reject_rate": 1 - acc / trials, "accepts": acc,
              "rejects": trials - acc, "max_queries": max(t["queries"] for t in trials_out)}
    if per_trial:
        result["trials"] = trials_out
    emit("test", cfg, result, True, fmt)


def graph_pattern(g: sg.SimpleGraph) -> ss.Structure:
    """A graph as a structure with a symmetric binary relation E."""
    e = g.edges().tolist()
    return ss.Structure(ss.simple_signature("E"), g.n, {"E": {(u, v) for u, v in e} | {(v, u) for u, v in e}})


# witness

def subtree_labels(a: ss.Structure) -> np.ndarray:
    """Component label of each element after cutting the root off: one label
    per root child subtree, the root alone gets the last label."""
    lev = ss.tree_levels(a)
    kids = ss.f_children(a)
    root = int(np.flatnonzero(lev == 0)[0])
    first = [c[0] for _, c in sorted(kids[root].items())]
    lab = np.full(a.n, len(first), dtype=np.int64)
    for i, c in enumerate(first):
        stack = [c]
        while stack:
            x = stack.pop()
            lab[x] = i
            for cs in kids.get(x, {}).values():
                stack.extend(cs)
    return lab


def witness_report(D: int, depth: int, seed: int, trials: int = 64, r_max: int = 3) -> dict:
    if D not in (2, 3):
        raise ValueError("witness experiment supports D = 2 or 3")
    if depth < 2:
        raise ValueError("depth must be at least 2")
    h, _ = rg.random_regular_base(D, seed, trials)
    A = ss.build_model(h, depth)
    small = ss.build_model(h, depth - 1)
    copies = D ** 4
    pad = A.n - copies * small.n
    B = ss.disjoint_union([small] * copies, pad=pad)
    d = gd.structure_degree(D)
    n = A.n
    sd = ts.sampling_distance(A, B, r_max)
    ug = ss.underlying_graph(A)
    spec = rg.spectrum(ug)
    # any bijection maps B's components to parts of size <= n/2, and every
    # U-edge crossing them is a tuple of A that B cannot have
    h_lower = ug.degree * (1 - spec.lambda2) / 2
    certified = math.ceil(n * h_lower / 2 - 1e-9)
    labels = subtree_labels(A)
    measured = ss.partition_cut(ug, labels)
    eps = 1 / (144 * D * D)
    threshold = eps * d * n
    normalized = certified / (d * n)
    delta1 = sd.per_radius[1] if len(sd.per_radius) > 1 else None
    certified_far = certified >= threshold
    gap = delta1 is not None and delta1 < normalized
    return {
        "D": D, "depth": depth, "n": n, "d": d, "padding": pad,
        "construction": f"B = {copies} disjoint copies of the depth-{depth - 1} model plus {pad} isolated elements",
        "sampling_distance": sd.as_dict(),
        "delta0_le_padding_fraction": sd.per_radius[0] is not None and sd.per_radius[0] <= pad / n,
        "lambda2_U": spec.lambda2, "degree_U": ug.degree,
        "certified_lower_bound": certified,
        "measured_subtree_cut": measured,
        "epsilon": eps, "threshold": threshold,
        "measured_cut_meets_threshold": measured >= threshold,
        "certified_meets_threshold": certified_far,
        "normalized_certified_distance": normalized,
        "delta1": delta1,
        "delta1_below_normalized_distance": gap,
        "pattern_exhibited": certified_far and gap,
        "conclusion": ("locality gap exhibited: small delta with certified farness" if certified_far and gap else
                       "locality gap not exhibited at this scale: "
                       + ("certified farness below threshold" if not certified_far else "")
                       + ("; " if not certified_far and not gap else "")
                       + ("delta1 not below the normalized distance" if not gap else "")),
    }


@main.command()
@click.option("--d", "D", type=int, default=2, show_default=True)
@click.option("--depth", type=int, default=3, show_default=True)
@seed_option
@click.option("--trials", type=int, default=64, show_default=True)
@fmt_option
def witness(D, depth, seed, trials, fmt):
    """Compare a deep model with copies of a shallower one."""
    cfg = {"D": D, "depth": depth, "seed": seed, "trials": trials}
    try:
        rep = witness_report(D, depth, seed, trials)
    except (ValueError, rg.CapExceeded) as exc:
        fail("witness", cfg, str(exc), fmt)
    emit("witness", cfg, rep, True, fmt)


if __name__ == "__main__":
    main()
