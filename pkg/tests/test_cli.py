import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_balanced
from netcomp.cli import main
from netcomp.degree import build_distribution
from netcomp.directed import weak_components


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def table_spec(path, mass, kind="directed"):
    idx = np.argwhere(mass > 0)
    spec = {"kind": kind, "dims": 2,
            "table": [{"index": [int(x) for x in i], "p": float(mass[tuple(i)])} for i in idx]}
    path.write_text(json.dumps(spec))
    return path


def test_compute_matches_module(capsys, data_dir, two_bump):
    code, out, err = run(capsys, "compute", "weak", "--spec", data_dir / "directed_two_bump.toml",
                         "--nmax", 100)
    assert code == 0 and err == ""
    r = rows(out)
    assert list(r[0]) == ["n", "w", "cumulative", "deficit"]
    w = np.array([float(x["w"]) for x in r])
    assert np.array_equal(w, weak_components(two_bump, 100).values)
    assert float(r[-1]["deficit"]) == pytest.approx(1 - w.sum(), abs=1e-15)


def test_compute_single_row(capsys, data_dir, two_bump):
    code, out, _ = run(capsys, "compute", "weak", "--spec", data_dir / "directed_two_bump.toml",
                       "--nmax", 1)
    r = rows(out)
    assert code == 0 and len(r) == 1
    assert float(r[0]["w"]) == two_bump.mass[0, 0]


def test_compute_json(capsys, data_dir):
    code, out, _ = run(capsys, "compute", "out", "--spec", data_dir / "directed_poisson.toml",
                       "--nmax", 5, "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["n"] == [1, 2, 3, 4, 5] and len(d["w"]) == 5


def test_missing_spec_exit_2(capsys, tmp_path):
    code, out, err = run(capsys, "compute", "weak", "--spec", tmp_path / "none.toml", "--nmax", 5)
    assert code == 2 and out == ""
    e = json.loads(err)["error"]
    assert e["code"] == "spec_not_found" and "not found" in e["message"] and e["module"]


def test_asymptote_slopes(capsys, data_dir):
    code, out, _ = run(capsys, "asymptote", "--spec", data_dir / "directed_two_bump.toml")
    rep = json.loads(out)
    assert code == 0 and rep["family"] == "weak_directed"
    assert rep["slope"]["transient_slope"] == pytest.approx(-1.5, abs=0.05)
    assert "epsilon" in rep["diagnostics"] and "condition" in rep["diagnostics"]
    assert rep["criterion"]["classification"] == "subcritical-side"
    code, out, _ = run(capsys, "asymptote", "--spec", data_dir / "directed_degenerate.toml")
    rep = json.loads(out)
    assert rep["family"] == "degenerate_directed"
    assert rep["slope"]["transient_slope"] == pytest.approx(-0.5, abs=0.05)


def test_asymptote_curve_file(capsys, data_dir, tmp_path):
    out_csv = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "asymptote", "--spec", data_dir / "two_layer_oscillating.toml",
                     "--nmax", 50, "--out", out_csv)
    r = rows(out_csv.read_text())
    assert code == 0 and len(r) == 49 and r[0]["n"] == "2"


def test_asymptote_no_root_error(capsys, tmp_path):
    rng = np.random.default_rng(1)
    for _ in range(108):
        u = random_balanced(rng, K=6, density=0.5)
    spec = table_spec(tmp_path / "hot.json", u.mass)
    code, out, err = run(capsys, "asymptote", "--spec", spec)
    assert code == 1 and out == ""
    assert json.loads(err)["error"]["code"] == "no_root"


def test_kind_mismatch(capsys, data_dir, tmp_path):
    census = tmp_path / "out.csv"
    code, _, _ = run(capsys, "simulate", "--kind", "out", "--spec", data_dir / "directed_poisson.toml",
                     "--nodes", 10000, "--roots", 1000, "--out", census)
    assert code == 0
    code, out, err = run(capsys, "compare", "--kind", "weak", "--spec",
                         data_dir / "directed_poisson.toml", "--census", census)
    assert code == 1 and out == ""
    assert json.loads(err)["error"]["code"] == "kind_mismatch"


def test_deterministic_outputs(capsys, data_dir, tmp_path):
    spec = data_dir / "directed_two_bump.toml"
    outs = []
    for k in range(2):
        a, b = tmp_path / f"sim{k}.csv", tmp_path / f"cmp{k}.csv"
        run(capsys, "simulate", "--spec", spec, "--nodes", 50000, "--seed", 5, "--out", a)
        run(capsys, "compare", "--spec", spec, "--census", a, "--nmax", 60, "--out", b)
        outs.append((a.read_bytes(), b.read_bytes()))
    assert outs[0] == outs[1]
    c = tmp_path / "other.csv"
    run(capsys, "simulate", "--spec", spec, "--nodes", 50000, "--seed", 6, "--out", c)
    assert c.read_bytes() != outs[0][0]


@pytest.mark.parametrize("seed", [1, 2])
def test_two_layer_end_to_end(capsys, data_dir, tmp_path, seed):
    spec = data_dir / "two_layer_oscillating.toml"
    census = tmp_path / "sim.csv"
    code, _, _ = run(capsys, "simulate", "--spec", spec, "--nodes", 10**6, "--seed", seed,
                     "--out", census)
    assert code == 0
    report = tmp_path / "cmp.csv"
    code, out, err = run(capsys, "compare", "--spec", spec, "--census", census, "--nmax", 100,
                         "--out", report)
    summary = json.loads(out)
    assert code == 0 and summary["pass"] and summary["checked"] > 20
    sources = {r["source"] for r in rows(report.read_text())}
    assert sources == {"exact", "asymptote", "empirical"}


def test_ingest_command(capsys, tmp_path):
    edges = tmp_path / "e.txt"
    edges.write_text("0 1\n1 2\n3 4\n")
    spec, census = tmp_path / "spec.json", tmp_path / "census.csv"
    code, out, _ = run(capsys, "ingest", edges, "--out", spec, "--census", census)
    summary = json.loads(out)
    assert code == 0 and summary["nodes"] == 5 and summary["edges"] == 3
    u = build_distribution(spec)
    assert u.mass[0, 1] == pytest.approx(0.4) and u.mass[1, 1] == pytest.approx(0.2)
    r = rows(census.read_text())
    assert {int(x["n"]): int(x["count"]) for x in r} == {1: 0, 2: 1, 3: 1}


def test_explain_lists_defaults(capsys):
    code, out, _ = run(capsys, "--explain")
    assert code == 0 and json.loads(out)["nodes"] == 10**6


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "netcomp", "compute", "weak", "--spec",
                        str(tmp_path / "missing.toml")], capture_output=True, text=True)
    assert p.returncode == 2 and p.stdout == ""
    assert json.loads(p.stderr.strip().splitlines()[-1])["error"]["code"] == "spec_not_found"
