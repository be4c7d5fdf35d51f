import json
import subprocess
import sys

import pytest

from hamstab.cli import main
from hamstab.families import markeyev
from hamstab.hamiltonian import HalfPowerSeries
from hamstab.normalform import deautonomize


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def verdict(doc):
    v = doc["analytic"]["verdict"]
    return v["kind"], v["criterion"]


def test_markeyev_unstable_with_certificate(capsys):
    code, out, _ = run(["examples", "markeyev", "--s", "-1"], capsys)
    doc = json.loads(out)
    assert code == 0 and verdict(doc) == ("Unstable", "Even-B")
    assert doc["analytic"]["certificate"]["status"] == "passed"
    assert doc["settings"]["grid"] == "256x64" and doc["empirical"] is None


def test_intro_example_stable(capsys):
    code, out, _ = run(["examples", "intro-example", "--a", "1"], capsys)
    doc = json.loads(out)
    assert code == 0 and verdict(doc) == ("Stable", "Even-A")
    assert doc["analytic"]["twist"]["status"] == "computed"


def test_mansilla_vidal_stable(capsys):
    code, out, _ = run(["examples", "mansilla-vidal", "--q", "6", "--s", "1"], capsys)
    doc = json.loads(out)
    assert code == 0 and verdict(doc) == ("Stable", "Even-A")
    assert doc["normal_form"]["in_normal_form"] and doc["input"]["omega"] == "1/6"


def test_prescreen_decides_cubic_family(capsys):
    _, out, _ = run(["examples", "cubic-family", "--k", "3"], capsys)
    assert verdict(json.loads(out)) == ("Unstable", "Odd")


def test_reports_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(["examples", "markeyev", "--s", "-1", "--kappa", "2", "--out", str(path)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_text_format(capsys):
    code, out, _ = run(["examples", "markeyev", "--format", "text", "--grid", "32x8"], capsys)
    assert code == 0
    assert 'analytic.verdict.kind: "Stable"' in out.splitlines()


def test_classify_file_and_round_trip(tmp_path, capsys):
    H = markeyev(-1.0).H
    src = tmp_path / "h.txt"
    src.write_text(H.to_text())
    assert HalfPowerSeries.parse(src.read_text()) == H
    code, out, _ = run(["classify", "--input", str(src), "--grid", "64x16"], capsys)
    doc = json.loads(out)
    assert code == 0 and verdict(doc) == ("Unstable", "Even-B")
    assert HalfPowerSeries.parse("\n".join(doc["input"]["series"])) == H


def test_classify_time_periodic_input(tmp_path, capsys):
    ex = markeyev(1.0, -2.0)
    src = tmp_path / "tps.txt"
    src.write_text(deautonomize(ex.H, ex.omega).to_text())
    code, out, _ = run(["classify", "--input", str(src), "--omega", "1/4"], capsys)
    doc = json.loads(out)
    assert code == 0 and verdict(doc) == ("Stable", "Even-A")
    assert doc["analytic"]["prescreen"] == "pair"


def test_normalform_command(tmp_path, capsys):
    src = tmp_path / "tps.txt"
    src.write_text("# mu nu l re im\n2 2 0 1.0 0.0\n3 1 0 0.5 0.0\n1 3 0 0.5 0.0\n")
    code, out, _ = run(["normalform", "--input", str(src), "--omega", "1/4"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["residual"] == pytest.approx(0.5) and not doc["in_normal_form"]


def test_non_normal_form_is_a_pipeline_error(tmp_path, capsys):
    src = tmp_path / "tps.txt"
    src.write_text("3 1 0 0.5 0.0\n1 3 0 0.5 0.0\n2 2 0 1.0 0.0\n")
    code, _, err = run(["classify", "--input", str(src), "--omega", "1/4"], capsys)
    assert code == 1 and "autonomize: NotInNormalForm" in err


def test_parse_error_exit_code(tmp_path, capsys):
    src = tmp_path / "bad.txt"
    src.write_text("4 0 1 1.0\n4 1 c oops\n")
    code, _, err = run(["classify", "--input", str(src)], capsys)
    assert code == 2 and "line 2, column 7" in err


def test_missing_file_exit_code(tmp_path, capsys):
    code, _, _ = run(["classify", "--input", str(tmp_path / "none.txt")], capsys)
    assert code == 2


def test_simulate_writes_csv(tmp_path, capsys):
    src = tmp_path / "h.txt"
    src.write_text(markeyev(-1.0).H.to_text())
    out = tmp_path / "traj.csv"
    code, _, _ = run(
        ["simulate", "--input", str(src), "--r0", "1e-3", "--phi0", "0", "--horizon", "1e4", "--epsilon", "0.1", "--out", str(out)],
        capsys,
    )
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == "t,r,phi,H"
    assert float(lines[-1].split(",")[1]) > 0.1


def test_twist_command(tmp_path, capsys):
    src = tmp_path / "h.txt"
    src.write_text("4 0 1 1.0\n")
    code, out, _ = run(["twist", "--input", str(src), "--h0", "0.01"], capsys)
    rep = json.loads(out)["twist"]
    assert code == 0 and rep["d2h_dI2"] == pytest.approx(2.0, abs=1e-10) and rep["lambda"] == pytest.approx(0.2)


def test_bad_grid_is_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["examples", "markeyev", "--grid", "0x4"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hamstab", "examples", "intro-example", "--a", "-1", "--grid", "32x8"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["analytic"]["verdict"]["criterion"] == "Even-B"
