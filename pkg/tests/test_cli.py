import csv
import io
import json

import numpy as np
import pytest

from minkiso import cli
from minkiso.corpus import corpus
from minkiso.meshio import write_minkmesh
from minkiso.surface import mesh_from_parametric


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def flat_mesh(tmp_path_factory):
    path = tmp_path_factory.mktemp("mesh") / "flat.minkmesh"
    write_minkmesh(mesh_from_parametric(corpus("flat-disk"), 12), path)
    return str(path)


def test_slope_json(capsys):
    code, out, _ = run(capsys, "slope", "--surface", "boosted-disk", "--params", "beta=0.5")
    rec = json.loads(out)
    assert code == 0 and rec["tau"] == pytest.approx(np.cosh(0.5), rel=1e-12)


def test_check_thm1_csv(capsys):
    code, out, _ = run(capsys, "check-thm1", "--surface", "flat-disk", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["ratio"]) == pytest.approx(1.0) and rows[0]["passed"] == "True"


def test_table(capsys):
    code, out, _ = run(capsys, "check-thm2", "--surface", "sphere-cap", "--format", "table")
    assert code == 0 and "ratio" in out and "identity_gap" in out


def test_out_file_infers_csv(capsys, tmp_path):
    path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "check-thm1", "--surface", "flat-disk", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("surface,")


def test_out_file_json(capsys, tmp_path):
    path = tmp_path / "r.json"
    assert run(capsys, "fiala-huber", "--surface", "flat-disk", "--out", str(path))[0] == 0
    assert json.loads(path.read_text())["holds"] is True


def test_curvature_parametric(capsys):
    code, out, _ = run(capsys, "curvature", "--surface", "sphere-cap")
    rec = json.loads(out)
    assert code == 0 and rec["K_min"] == pytest.approx(1.0, rel=1e-6)


def test_curvature_mesh(capsys, flat_mesh):
    code, out, _ = run(capsys, "curvature", "--mesh", flat_mesh)
    rec = json.loads(out)
    assert code == 0 and rec["euler_characteristic"] == 1


def test_solve_neumann(capsys):
    code, out, _ = run(capsys, "solve-neumann", "--surface", "elliptic-catenoid", "--res", "24")
    rec = json.loads(out)
    assert code == 0 and rec["passed"]


def test_abp_diagnose_mesh(capsys, flat_mesh):
    code, out, _ = run(capsys, "abp-diagnose", "--mesh", flat_mesh, "--samples", "40")
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and [r["check"] for r in lines] == ["surjectivity"]


def test_abp_diagnose_subset(capsys):
    code, out, _ = run(capsys, "abp-diagnose", "--surface", "flat-disk", "--res", "24",
                       "--checks", "jacobian,amgm", "--samples", "20")
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and {r["check"] for r in lines} == {"jacobian", "amgm"}
    assert all(r["passed"] for r in lines)


def test_fiala_huber_geodesic(capsys):
    code, out, _ = run(capsys, "fiala-huber", "--surface", "elliptic-catenoid",
                       "--params", "r0=0.25", "--center", "0.8,0", "--rho", "0.2")
    rec = json.loads(out)
    assert code == 0 and rec["euclidean_fails"] and rec["passed"]


def test_geodesic_expansion(capsys):
    code, out, _ = run(capsys, "geodesic-expansion", "--surface", "sphere-cap",
                       "--params", "angle=1")
    assert code == 0 and json.loads(out)["relative_error"] < 1e-3


def test_fuzz(capsys):
    code, out, _ = run(capsys, "lemma-linear-fuzz", "--samples", "200",
                       "--signatures", "2,0,2;2,1,2")
    recs = json.loads(out)
    assert code == 0 and [r["signature"] for r in recs] == [[2, 0, 2], [2, 1, 2]]


def test_corpus_list(capsys):
    code, out, _ = run(capsys, "corpus", "list")
    names = {r["name"] for r in json.loads(out)}
    assert code == 0 and {"flat-disk", "elliptic-catenoid", "sphere-cap"} <= names


@pytest.mark.parametrize("argv", [
    ["slope", "--surface", "nope"],
    ["slope", "--surface", "flat-disk", "--params", "beta"],
    ["check-thm2", "--surface", "flat-disk"],
    ["slope"],
    ["fiala-huber", "--surface", "flat-disk", "--center", "0,0"],
    ["fiala-huber", "--surface", "euclidean-catenoid"],
])
def test_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_bad_mesh_file(capsys, tmp_path):
    bad = tmp_path / "bad.minkmesh"
    bad.write_text("minkmesh 2 1\nv 0 0\n")
    assert run(capsys, "slope", "--mesh", str(bad))[0] == 2
    assert run(capsys, "slope", "--mesh", str(tmp_path / "missing"))[0] == 2


def test_violation_exit(capsys):
    # a finite-radius fit never hits K_p / 4 exactly, so zero tolerance fails
    code, out, _ = run(capsys, "geodesic-expansion", "--surface", "sphere-cap",
                       "--tolerance", "0")
    assert code == 1 and json.loads(out)["passed"] is False
