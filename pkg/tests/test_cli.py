import csv
import io
import json
import shutil
import subprocess

import pytest

from cweig.cli import main
from cweig.geometry import SupportShape
from cweig.io import read_shape, write_shape

LISTDISK = [1, 2, 3, 4, 5, 7, 8, 11, 12, 16, 17, 27, 33, 34, 41, 42, 50]


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_analyze_disk(capsys, tmp_path):
    assert main(["analyze-disk", "--h", "50", "--out", str(tmp_path)]) == 0
    out = rows(capsys.readouterr().out)
    assert len(out) == 50
    assert [int(r["h"]) for r in out if r["status"] == "weak-local-min"] == LISTDISK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == [str(tmp_path / "verdicts.csv")]


def test_analyze_disk_single_row(capsys):
    assert main(["analyze-disk", "--h", "1"]) == 0
    out = rows(capsys.readouterr().out)
    assert len(out) == 1 and out[0]["status"] == "weak-local-min"


def test_usage_errors():
    assert main_code(["analyze-disk", "--h", "0"]) == 1
    assert main_code(["solve", "disk"]) == 1
    assert main_code(["bogus"]) == 1


def main_code(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def test_solve_disk(capsys, tmp_path):
    shape = write_shape(SupportShape.disk(), tmp_path / "disk.txt")
    assert main(["solve", str(shape), "--h", "6"]) == 0
    out = rows(capsys.readouterr().out)
    assert len(out) == 6
    assert float(out[-1]["lambda"]) == pytest.approx(30.4713, abs=1e-3)
    assert out[1]["multiplicity"] == "double" and out[5]["multiplicity"] == "simple"


def test_solve_bad_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("width 2\n4 0.1 0.0\n")
    assert main(["solve", str(bad), "--h", "3"]) == 1
    infeasible = write_shape(SupportShape.from_dict({3: (0.2, 0.0)}), tmp_path / "inf.txt")
    assert main(["solve", str(infeasible), "--h", "3"]) == 2
    assert main(["solve", str(tmp_path / "missing.txt"), "--h", "3"]) == 1
    assert "error" in capsys.readouterr().err


def test_grad_check_and_optimality(capsys):
    assert main(["grad-check", "disk", "--h", "6", "--harmonics", "3", "--basis", "60"]) == 0
    out = rows(capsys.readouterr().out)
    assert {r["part"] for r in out} == {"a", "b"}
    assert all(abs(float(r["analytic"])) <= 1e-6 for r in out)
    assert main(["check-optimality", "disk", "--h", "6"]) == 0
    out = rows(capsys.readouterr().out)
    assert float(out[0]["residual"]) <= 1e-10
    assert float(out[0]["gradient_max"]) <= 1e-6


def test_double_index_is_domain_error(capsys):
    assert main(["check-optimality", "disk", "--h", "2"]) == 2
    assert main(["grad-check", "disk", "--h", "2", "--basis", "60"]) == 2
    assert "MultiplicityError" in capsys.readouterr().err
    assert main(["check-optimality", "disk", "--h", "2", "--allow-double"]) == 0
    assert len(rows(capsys.readouterr().out)) == 2


def test_optimize_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["optimize", "--h", "6", "--restarts", "1", "--max-iter", "4", "--nmax", "15",
                 "--mconstraints", "400", "--seed", "3", "--out", str(out)])
    assert code == 0
    for name in ("shape.txt", "boundary.svg", "iterations.csv", "restarts.csv", "summary.csv",
                 "manifest.json"):
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert sorted(manifest["outputs"]) == sorted(str(p) for p in out.iterdir() if p.name != "manifest.json")
    assert manifest["seed"] == 3
    # manifest is written last
    assert (out / "manifest.json").stat().st_mtime >= max(p.stat().st_mtime for p in out.iterdir())
    summary = {r["field"]: r["value"] for r in rows((out / "summary.csv").read_text())}
    assert float(summary["lambda_h"]) <= 30.4713 + 1e-6
    shape = read_shape(out / "shape.txt")
    assert shape.width == 2.0
    log = rows((out / "iterations.csv").read_text())
    assert log and {"iter", "lambda_h", "grad_norm", "margin", "mu"} <= set(log[0])
    capsys.readouterr()


def test_optimize_bad_config():
    assert main(["optimize", "--h", "6", "--nmax", "40", "--mconstraints", "100"]) == 1


@pytest.mark.skipif(shutil.which("cweig") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["cweig", "analyze-disk", "--h", "6"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("h,m,p,lambda,status,witness")
    proc = subprocess.run(["cweig", "analyze-disk", "--h", "0"], capture_output=True, text=True)
    assert proc.returncode == 1


def test_optimize_bad_config_leaves_no_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["optimize", "--h", "6", "--nmax", "40", "--mconstraints", "100"]) == 1
    assert list(tmp_path.iterdir()) == []
