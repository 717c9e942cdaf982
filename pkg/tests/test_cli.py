import csv
import json
import subprocess
import sys

import pytest

from reference_operators import H2_STO3G_RESTRICTED
from qee.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_USAGE, RunManifest, bench_point, loglog_slopes, main
from qee.pauli import PauliOperator


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def h2_ham(tmp_path, capsys):
    path = tmp_path / "h2.json"
    assert run(capsys, "encode", "--fixture", "h2_sto3g_restricted", "--out", path)[0] == 0
    return path


def test_encode_prints_five_lines(capsys, tmp_path):
    code, out, _ = run(capsys, "encode", "--fixture", "h2_sto3g_restricted", "--electronic-only",
                       "--out", tmp_path / "op.json")
    assert code == 0
    expect = {f"{c:+.6f} · {lbl}" for lbl, c in H2_STO3G_RESTRICTED.items()}
    assert set(out.strip().splitlines()) == expect
    op = PauliOperator.from_json((tmp_path / "op.json").read_text())
    assert len(op) == 5


def test_diag_matches_ci_energy(capsys, h2_ham, store):
    e_fci = store.get("h2_sto3g_restricted").reference["e_fci"]
    code, out, _ = run(capsys, "diag", "--ham", h2_ham, "--expect", e_fci)
    assert code == 0
    assert abs(float(out.strip()) - e_fci) < 1e-9


def test_diag_mismatch_exits_4(capsys, h2_ham, tmp_path):
    code, _, err = run(capsys, "diag", "--ham", h2_ham, "--expect", "0", "--json", "--out", tmp_path / "d.json")
    assert code == EXIT_NUMERICAL
    doc = json.loads(err)
    assert doc["error"] == "numerical" and doc["exit"] == EXIT_NUMERICAL
    assert (tmp_path / "d.json.manifest.json").exists()


def test_usage_and_input_errors(capsys, tmp_path):
    assert run(capsys, "encode")[0] == EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE
    assert run(capsys, "zne", "--ham", "x", "--cnot-counts", "a,b")[0] in (EXIT_USAGE, EXIT_INPUT)
    assert run(capsys, "diag", "--ham", tmp_path / "missing.json")[0] == EXIT_INPUT
    assert run(capsys, "encode", "--fixture", "no_such_fixture")[0] == EXIT_INPUT
    bad = tmp_path / "bad.fcidump"
    bad.write_text("&FCI NORB=2,NELEC=2,\n&END\n 1.0 3 1 1 1\n")
    assert run(capsys, "encode", "--input", bad, "--filter", "m=2")[0] == EXIT_INPUT


def test_json_flag_position(capsys):
    for argv in (["--json", "configs", "--n-spin", "4", "--filter", "m=2;sz=1,1"],
                 ["configs", "--n-spin", "4", "--filter", "m=2;sz=1,1", "--json"]):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        assert json.loads(out)["qubit_count"] == 2


def test_configs_table(capsys):
    code, out, _ = run(capsys, "configs", "--n-spin", "4", "--filter", "m=2;sz=1,1")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 5
    assert lines[1].split()[-2:] == ["0101", "00"]


def test_report_qubit_columns(capsys):
    code, out, _ = run(capsys, "report", "--qubits-only", "--json")
    assert code == 0
    rows = json.loads(out)
    assert [(r["jw_qubits"], r["qee_qubits"]) for r in rows] == [
        (8, 4), (12, 6), (10, 6), (18, 8), (16, 6), (32, 8), (28, 8), (16, 6), (32, 8), (16, 6), (16, 6), (16, 6)]


def test_report_term_counts_for_small_row(capsys):
    code, out, _ = run(capsys, "report", "--only", "lih", "--format", "csv")
    assert code == 0
    header, row = csv.reader(out.strip().splitlines())
    assert header == ["molecule", "frozen", "jw_qubits", "jw_terms", "qee_qubits", "qee_terms"]
    assert row == ["LiH", "0, 3", "8", "193", "4", "100"]


def test_manifest_and_replay(capsys, tmp_path):
    out = tmp_path / "op.json"
    assert run(capsys, "encode", "--fixture", "h2_sto3g_unrestricted", "--out", out, "--seed", "3")[0] == 0
    manifest = RunManifest.from_json((tmp_path / "op.json.manifest.json").read_text())
    assert manifest.command == "encode"
    assert manifest.seeds == {"global": 3}
    assert manifest.filter and manifest.inputs[0]["sha256"]
    assert "encode" in manifest.timings
    first = out.read_bytes()
    out.unlink()
    assert run(capsys, "replay", tmp_path / "op.json.manifest.json")[0] == 0
    assert out.read_bytes() == first


def test_vqe_command(capsys, h2_ham, tmp_path):
    code, out, _ = run(capsys, "vqe", "--ham", h2_ham, "--out", tmp_path / "v.json", "--json")
    assert code == 0
    doc = json.loads((tmp_path / "v.json").read_text())
    assert abs(doc["energy"] - doc["reference_minimum"]) < 1e-6
    assert run(capsys, "vqe", "--ham", h2_ham, "--backend", "noisy:santiago")[0] in (EXIT_USAGE, EXIT_INPUT)


def test_zne_command(capsys, h2_ham, tmp_path):
    code, out, _ = run(capsys, "zne", "--ham", h2_ham, "--shots", 2000, "--repeats", 3, "--cnot-counts", "2,4,6",
                       "--out", tmp_path / "z.json", "--csv", tmp_path / "z.csv")
    assert code == 0
    doc = json.loads((tmp_path / "z.json").read_text())
    assert [p["cnot_count"] for p in doc["points"]] == [2, 4, 6]
    assert abs(doc["deviation"]) == pytest.approx(abs(doc["intercept"] - doc["exact"]))
    assert (tmp_path / "z.csv").read_text().startswith("cnot_count,mean,std")


def test_scan_command(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "--group", "h2_631g", "--distances", "0.745", "--out", tmp_path / "s.csv")
    assert code == 0
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("0.745,")
    err = float(rows[1].split(",")[4])
    assert 0 <= err < 1.6e-3


def test_fixtures_verify(capsys, tmp_path):
    assert run(capsys, "fixtures", "verify")[0] == 0
    assert "h2_sto3g_restricted" in run(capsys, "fixtures", "list")[1]


def test_bench_small_grid(capsys, tmp_path):
    code, out, _ = run(capsys, "bench", "--grid", "4:2,6:2,6:6", "--repeats", 1, "--json")
    assert code == 0
    points = json.loads(out)["points"]
    for p in points:
        assert p["raw_measured"] == p["raw_analytic"] <= p["raw_bound"]
    first = points[0]
    assert first["configs"] == 6 and first["raw_bound"] == 288
    single = points[2]
    assert single["qubits"] == 0 and single["configs"] == 1


def test_bench_rejects_bad_grid(capsys):
    assert run(capsys, "bench", "--grid", "5:2")[0] == EXIT_USAGE
    assert run(capsys, "bench", "--grid", "40:20")[0] == EXIT_USAGE


def test_bench_point_and_slopes():
    p = bench_point(6, 3, seed=1, repeats=1)
    assert p["raw_measured"] == p["nonzero_elements"] << p["qubits"]
    assert loglog_slopes([{"n": 4, "m": 2, "seconds": 1.0}, {"n": 8, "m": 2, "seconds": 8.0}]) == {2: pytest.approx(3.0)}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qee", "configs", "--n-spin", "4", "--filter", "m=1"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert len(res.stdout.strip().splitlines()) == 5
