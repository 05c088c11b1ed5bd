"""CLI behaviour: golden outputs, exit codes and lossless round trips.

Set GLGEO_UPDATE_GOLDEN=1 to rewrite the golden files after an intended change.
"""

import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from glgeo.cli import main
from oracles import rotation2

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
DATA = HERE / "data"

ID2 = "[[1,0],[0,1]]"
TANGENT = "[[0.2,0.5],[-0.3,0.1]]"
ROT90 = json.dumps(rotation2(math.pi / 2).tolist())

GOLDEN_CASES = {
    "dist_identity.json": ["dist", "--a", ID2, "--b", ID2],
    "dist_diag.csv": ["dist", "--a", ID2, "--b", f"@{DATA / 'exp_diag.json'}", "--format", "csv"],
    "dist_infinite.json": ["dist", "--a", ID2, "--b", "[[1,0],[0,-1]]"],
    "geodesic_verify.csv": ["geodesic", "--base", ID2, "--tangent", TANGENT, "--samples", "5", "--verify", "--format", "csv"],
    "geodesic.json": ["geodesic", "--base", "[[2,0],[1,1]]", "--tangent", TANGENT, "--samples", "3", "--mu", "2", "--muc", "0.5", "--kappa", "3"],
    "verify_constant.json": ["verify", str(DATA / "constant_curve.csv")],
    "verify_line.csv": ["verify", str(DATA / "straight_line.csv"), "--format", "csv"],
    "hencky_diag.json": ["hencky", "--f", f"[[{math.e!r},0],[0,{math.e!r}]]"],
    "matfun_exp.csv": ["matfun", "exp", "--m", "[[0,0],[0,0]]", "--format", "csv"],
    "matfun_log.json": ["matfun", "log", "--m", f"[[{math.e**2!r},0],[0,1]]"],
    "matfun_normal_log.csv": ["matfun", "normal-log", "--m", ROT90, "--max-winding", "1", "--format", "csv"],
}
GOLDEN_CODES = {"dist_infinite.json": 3, "verify_line.csv": 2}


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(name, capsys):
    code, out = run(GOLDEN_CASES[name], capsys)
    assert code == GOLDEN_CODES.get(name, 0)
    path = GOLDEN / name
    if os.environ.get("GLGEO_UPDATE_GOLDEN"):
        path.write_text(out)
    assert out == path.read_text()
    code2, out2 = run(GOLDEN_CASES[name], capsys)
    assert (code2, out2) == (code, out)


class TestDist:
    def test_identity(self, capsys):
        code, out = run(GOLDEN_CASES["dist_identity.json"], capsys)
        obj = json.loads(out)
        assert code == 0 and obj["value"] == 0

    def test_diagonal(self, capsys):
        code, out = run(GOLDEN_CASES["dist_diag.csv"], capsys)
        (row,) = rows(out)
        assert code == 0
        assert abs(float(row["value"]) - 0.3 * math.sqrt(2)) <= 1e-6

    def test_infinite(self, capsys):
        code, out = run(GOLDEN_CASES["dist_infinite.json"], capsys)
        obj = json.loads(out)
        assert code == 3 and obj["status"] == "infinite" and obj["minimizer"] is None

    def test_upper_bound_exit(self, capsys):
        argv = ["dist", "--a", ID2, "--b", "[[-3,1],[-1,-0.2]]", "--max-starts", "1", "--mu", "2", "--muc", "0.5"]
        code, out = run(argv + ["--tol", "1e-30"], capsys)
        assert code == 2 and json.loads(out)["status"] == "best_upper_bound"

    def test_seed_from_environment(self, capsys, monkeypatch):
        argv = ["dist", "--a", ID2, "--b", "[[-3,1],[-1,-0.2]]"]
        monkeypatch.setenv("GLGEO_SEED", "7")
        first = run(argv, capsys)
        assert first == run(argv + ["--seed", "7"], capsys)

    def test_malformed(self, capsys):
        assert main(["dist", "--a", "[[1,0],[0]]", "--b", ID2]) == 64
        assert main(["dist", "--a", ID2, "--b", "[[1,0,0],[0,1,0],[0,0,1]]"]) == 64
        assert main(["dist", "--a", ID2]) == 64
        assert main(["dist", "--a", "@/nonexistent/file.json", "--b", ID2]) == 64

    def test_singular(self, capsys):
        assert main(["dist", "--a", ID2, "--b", "[[1,2],[2,4]]"]) == 65


class TestGeodesic:
    def test_first_row_is_base(self, capsys):
        base = "[[2,0],[1,1]]"
        code, out = run(["geodesic", "--base", base, "--tangent", TANGENT, "--samples", "2", "--t1", "0.5", "--format", "csv"], capsys)
        first = rows(out)[0]
        assert code == 0
        assert [float(first[k]) for k in ("x11", "x12", "x21", "x22")] == [2, 0, 1, 1]

    def test_conserved_columns(self, capsys):
        _, out = run(GOLDEN_CASES["geodesic_verify.csv"], capsys)
        table = rows(out)
        for key in ("norm", "trace", "det", "trcof"):
            values = [float(r[key]) for r in table]
            assert max(values) - min(values) <= 1e-9 * max(1, abs(values[0]))

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_roundtrip_through_verify(self, fmt, tmp_path, capsys):
        out_file = tmp_path / f"curve.{fmt}"
        argv = ["geodesic", "--base", "[[2,0],[1,1]]", "--tangent", TANGENT, "--samples", "1001",
                "--format", fmt, "--out", str(out_file), "--mu", "2", "--muc", "0.5"]
        assert main(argv) == 0
        code, out = run(["verify", str(out_file), "--mu", "2", "--muc", "0.5"], capsys)
        report = json.loads(out)
        assert code == 0 and report["residual"] <= 1e-4

    def test_serialization_lossless(self, tmp_path, capsys):
        from glgeo import GeodesicSpec, MetricParams, sample_geodesic

        out_file = tmp_path / "curve.json"
        main(["geodesic", "--base", "[[2,0],[1,1]]", "--tangent", TANGENT, "--samples", "7", "--out", str(out_file)])
        obj = json.loads(out_file.read_text())
        spec = GeodesicSpec(np.array([[2.0, 0], [1, 1]]), np.array(json.loads(TANGENT)), MetricParams())
        ref = sample_geodesic(spec, np.linspace(0, 1, 7))
        assert np.array_equal(np.array(obj["points"]), ref.points)
        assert np.array_equal(np.array(obj["times"]), ref.times)

    def test_errors(self, capsys):
        assert main(["geodesic", "--base", ID2, "--tangent", TANGENT, "--samples", "1"]) == 64
        assert main(["geodesic", "--base", ID2, "--tangent", TANGENT, "--t1", "0"]) == 64
        assert main(["geodesic", "--base", "[[1,0],[0,-1]]", "--tangent", TANGENT]) == 65


class TestVerify:
    def test_constant(self, capsys):
        code, out = run(GOLDEN_CASES["verify_constant.json"], capsys)
        assert code == 0 and json.loads(out)["residual"] == 0

    def test_straight_line_fails(self, capsys):
        code, out = run(GOLDEN_CASES["verify_line.csv"], capsys)
        assert code == 2 and rows(out)[0]["passed"] == "false"

    def test_stdin(self, capsys, monkeypatch):
        monkeypatch.setattr(sys, "stdin", io.StringIO((DATA / "constant_curve.csv").read_text()))
        assert main(["verify", "-"]) == 0

    def test_bad_files(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,x11\n0,abc\n")
        assert main(["verify", str(bad)]) == 64
        uneven = tmp_path / "uneven.csv"
        uneven.write_text("t,x11\n0,1\n0.1,1\n0.5,1\n")
        assert main(["verify", str(uneven)]) == 65


class TestHenckyMatfun:
    def test_hencky(self, capsys):
        _, out = run(GOLDEN_CASES["hencky_diag.json"], capsys)
        obj = json.loads(out)
        assert abs(obj["distance"] - math.sqrt(2)) <= 1e-12
        R, U = np.array(obj["rotation"]), np.array(obj["stretch"])
        assert np.allclose(R.T @ R, np.eye(2)) and np.allclose(U, U.T)
        assert np.allclose(R @ U, np.eye(2) * math.e)

    def test_hencky_rotation(self, capsys):
        _, out = run(["hencky", "--f", ROT90], capsys)
        assert abs(json.loads(out)["distance"]) <= 1e-12
        assert main(["hencky", "--f", "[[1,0],[0,-1]]"]) == 65

    def test_matfun_values(self, capsys):
        _, out = run(GOLDEN_CASES["matfun_exp.csv"], capsys)
        assert [float(v) for v in rows(out)[0].values()] == [1, 0, 0, 1]
        _, out = run(GOLDEN_CASES["matfun_log.json"], capsys)
        assert np.allclose(json.loads(out)["result"], [[2, 0], [0, 0]], atol=1e-14)

    def test_normal_log_listing(self, capsys):
        _, out = run(GOLDEN_CASES["matfun_normal_log.csv"], capsys)
        norms = [float(r["frobenius_norm"]) for r in rows(out)]
        assert len(norms) == 3 and norms == sorted(norms)
        assert norms[0] == pytest.approx(math.pi / 2 * math.sqrt(2), abs=1e-12)

    def test_matfun_domain(self, capsys):
        assert main(["matfun", "log", "--m", "[[1,0],[0,-1]]"]) == 65
        assert main(["matfun", "normal-log", "--m", "[[1,1],[0,1]]"]) == 65
        assert main(["matfun", "cosh", "--m", ID2]) == 64


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "glgeo", "dist", "--a", ID2, "--b", "[[1,0],[0,-1]]"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3
    assert json.loads(proc.stdout)["status"] == "infinite"
