import csv
import json

import pytest

from ziglin.cli import CSV_HEADER, EXIT_ALL_ABORTED, EXIT_CONFIG, main

from fuchsian import HAMILTONIAN_FUCHSIAN


@pytest.fixture
def fuchsian_file(tmp_path):
    p = tmp_path / "fuchsian.txt"
    p.write_text(HAMILTONIAN_FUCHSIAN)
    return str(p)


def run_fuchsian(tmp_path, fuchsian_file, name="r.json", extra=()):
    out = tmp_path / name
    code = main(["probe", "--system-file", fuchsian_file, "--x0", "0", "0", "--t0", "0",
                 "--candidate", "2+1i", "--candidate", "2-1i", "--radius", "0.5",
                 "-o", str(out), "--quiet", *extra])
    return code, out


def test_probe_reference_writes_report(tmp_path, capsys):
    out = tmp_path / "lp.json"
    assert main(["probe", "--system", "oracle_linear_pole", "--reference",
                 "-o", str(out)]) == 0
    text = capsys.readouterr().out
    assert "Generator" in text and "verdict: NoObstructionFound" in text
    data = json.loads(out.read_text())
    assert data["tool"] == "ziglin"
    assert data["outcomes"][0]["classification"] == "Generator"
    T = data["outcomes"][0]["generator"]["matrix"]
    assert T[0][0][0] == pytest.approx(-1, abs=1e-8)
    assert data["config"]["backend"] in ("cython", "python")


def test_probe_obstruction_and_check(tmp_path, fuchsian_file, capsys):
    code, out = run_fuchsian(tmp_path, fuchsian_file, extra=["--csv", str(tmp_path / "r.csv")])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["verdict"]["conclusion"] == "ObstructionFound"
    capsys.readouterr()
    assert main(["check", str(out), "--json"]) == 0
    assert json.loads(capsys.readouterr().out) == data["verdict"]
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == CSV_HEADER
    assert [r[2] for r in rows[1:]] == ["Generator", "Generator"]
    assert float(rows[1][0]) == 2.0 and float(rows[1][1]) == 1.0


def test_check_flag_overrides_tolerance(tmp_path, fuchsian_file, capsys):
    _, out = run_fuchsian(tmp_path, fuchsian_file)
    capsys.readouterr()
    assert main(["check", str(out), "--comm-tol", "1e6"]) == 0
    assert "NoObstructionFound" in capsys.readouterr().out


def test_reports_are_deterministic(tmp_path, fuchsian_file):
    _, a = run_fuchsian(tmp_path, fuchsian_file, "a.json")
    _, b = run_fuchsian(tmp_path, fuchsian_file, "b.json", extra=["--jobs", "2"])
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    for d in (da, db):
        d.pop("timestamp")
        d["config"].pop("output")
        d["config"].pop("jobs", None)
    assert da == db


def test_scan_with_config_and_csv(tmp_path, capsys):
    cfg = {"system": {"name": "oracle_harmonic"}, "x0": [[1, 0], [0, 0]], "t0": [0.5, 0.5],
           "domain": [-2, 2, -2, 2], "grid": [3, 2],
           "output": {"report": str(tmp_path / "s.json"), "csv": str(tmp_path / "s.csv")}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["scan", "-c", str(tmp_path / "cfg.json"), "--quiet"]) == 0
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == CSV_HEADER and len(rows) == 7
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["grid"] == [3, 2] and data["verdict"]["conclusion"] == "NoObstructionFound"


def test_param_override(tmp_path):
    out = tmp_path / "lp.json"
    assert main(["probe", "--system", "oracle_linear_pole", "--reference",
                 "--param", "lambda=0.25", "-o", str(out), "--quiet"]) == 0
    T = json.loads(out.read_text())["outcomes"][0]["generator"]["matrix"]
    assert T[0][0][0] == pytest.approx(0, abs=1e-8) and T[0][0][1] == pytest.approx(1, abs=1e-8)


def test_systems_listing(capsys):
    assert main(["systems", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data) == 6 and {d["name"] for d in data} >= {"henon_heiles", "satellite"}
    assert main(["systems"]) == 0
    assert "henon_heiles" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["probe", "--system", "oracle_harmonic", "--x0", "1", "0", "--candidate", "1"],
    ["scan", "--system", "oracle_harmonic", "--x0", "1", "0", "--t0", "3",
     "--domain", "0", "0", "-1", "1", "--grid", "2", "2"],
    ["probe", "--system", "no_such_system", "--x0", "1", "--t0", "0", "--candidate", "1"],
    ["probe", "--system", "oracle_harmonic", "--x0", "1", "--t0", "0", "--candidate", "1"],
    ["probe", "--system", "oracle_harmonic", "--reference", "--rel-tol", "-1"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert main(argv + ["-o", str(tmp_path / "x.json"), "--quiet"]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_tampered_report_exit_2(tmp_path, fuchsian_file):
    _, out = run_fuchsian(tmp_path, fuchsian_file)
    data = json.loads(out.read_text())
    data["outcomes"][0]["generator"]["matrix"] = [[[1, 0]]]
    out.write_text(json.dumps(data))
    assert main(["check", str(out)]) == EXIT_CONFIG
    out.write_text("{ not json")
    assert main(["check", str(out)]) == EXIT_CONFIG


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_all_aborted_exit_3(tmp_path):
    assert main(["probe", "--system", "oracle_riccati", "--reference", "--max-steps", "2",
                 "-o", str(tmp_path / "a.json"), "--quiet"]) == EXIT_ALL_ABORTED
    data = json.loads((tmp_path / "a.json").read_text())
    assert data["outcomes"][0]["classification"] == "Aborted"
