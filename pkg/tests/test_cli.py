import csv
import io
import json
import math

import numpy as np
import pytest

from tavis_qdm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_matrix_one_atom(capsys):
    code, out, _ = run(capsys, "matrix", "--atoms", "1")
    assert code == 0
    assert json.loads(out)["entries"] == [[0, "a"], ["a†", 0]]


def test_matrix_realized(capsys):
    code, out, _ = run(capsys, "matrix", "--atoms", "2", "--realize", "--cutoff", "6")
    data = json.loads(out)
    assert code == 0 and data["shape"] == [28, 28]
    assert np.array(data["real"]).shape == (28, 28)


def test_matrix_spin_block(capsys):
    code, out, _ = run(capsys, "matrix", "--block-j", "1.5")
    rows = json.loads(out)["entries"]
    assert code == 0
    assert [rows[k][k + 1] for k in range(3)] == ["√3·a", "2·a", "√3·a"]


def test_matrix_csv_is_parseable(capsys):
    code, out, _ = run(capsys, "matrix", "--atoms", "1", "--realize", "--cutoff", "4", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) > 1


@pytest.mark.parametrize("argv", [["matrix", "--atoms", "4"], ["matrix", "--block-j", "0.3"],
                                  ["matrix", "--atoms", "2", "--object", "nonsense"], ["frobnicate"]])
def test_matrix_usage_errors(capsys, argv):
    code = main(argv) if argv[0] != "frobnicate" else _exit_code(argv)
    _, err = capsys.readouterr()
    assert code == 2 and err


def _exit_code(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def test_evolve_rabi_csv(capsys):
    code, out, _ = run(capsys, "evolve", "--atoms", "1", "--state", "atoms=e;field=fock:0", "--g", "1",
                       "--omega", "0", "--t-max", "6.28", "--steps", "100")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 101
    assert list(rows[0]) == ["t", "P_e_1", "mean_photons", "norm"]
    for r in rows:
        t = float(r["t"])
        assert abs(float(r["P_e_1"]) - math.cos(t) ** 2) <= 1e-10
        assert abs(float(r["norm"]) - 1) <= 1e-10


def test_evolve_ground_state(capsys):
    code, out, _ = run(capsys, "evolve", "--atoms", "1", "--state", "atoms=g;field=fock:0", "--g", "1",
                       "--omega", "0", "--t-max", "6.28", "--steps", "100")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and all(float(r["P_e_1"]) == 0 for r in rows)


def test_evolve_three_atom_coherent(capsys):
    code, out, _ = run(capsys, "evolve", "--atoms", "3", "--state", "atoms=eee;field=coherent:2,0",
                       "--cutoff", "40", "--t-max", "2", "--steps", "4")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 5
    assert all(abs(float(r["norm"]) - 1) <= 1e-9 for r in rows)


def test_evolve_json(capsys):
    code, out, _ = run(capsys, "evolve", "--atoms", "2", "--state", "atoms=eg;field=fock:1", "--t", "0.4",
                       "--cutoff", "10", "--margin", "2", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["times"] == [0.4]
    amps = np.array(data["amplitudes"]["real"]) + 1j * np.array(data["amplitudes"]["imag"])
    assert amps.shape == (1, 44)
    assert np.linalg.norm(amps[0]) == pytest.approx(1.0)


@pytest.mark.parametrize("state", ["atoms=ee;field=fock:0", "atoms=e;field=laser:1", "atoms=e;field=coherent:9,0"])
def test_evolve_errors(capsys, state):
    code, _, err = run(capsys, "evolve", "--atoms", "1", "--state", state, "--t", "1", "--cutoff", "20")
    assert code == 2 and err


def test_evolve_bad_margin(capsys):
    code, _, err = run(capsys, "evolve", "--atoms", "1", "--state", "atoms=e;field=fock:0", "--t", "1",
                       "--cutoff", "10", "--margin", "5")
    assert code == 2 and err


def test_qdm_half(capsys):
    code, out, _ = run(capsys, "qdm", "--j", "0.5")
    data = json.loads(out)
    assert code == 0
    table = np.array(data["D"]["diagonal"])
    n = np.arange(41)
    assert np.allclose(table, np.stack([np.sqrt(n + 1), -np.sqrt(n + 1)], axis=1), atol=1e-14)
    assert data["reconstruction_residual"] <= 1e-9


def test_qdm_modes_agree(capsys):
    _, a, _ = run(capsys, "qdm", "--j", "1", "--mode", "per-level")
    _, b, _ = run(capsys, "qdm", "--j", "1", "--mode", "closed-form")
    ta = np.array(json.loads(a)["D"]["diagonal"])
    tb = np.array(json.loads(b)["D"]["diagonal"])
    assert np.abs(ta - tb).max() <= 1e-10


def test_qdm_per_level_j2(capsys):
    code, out, _ = run(capsys, "qdm", "--j", "2", "--mode", "per-level")
    assert code == 0 and json.loads(out)["reconstruction_residual"] <= 1e-9


@pytest.mark.parametrize("argv", [["qdm", "--j", "2"], ["qdm", "--j", "4.5", "--mode", "per-level"],
                                  ["qdm", "--j", "1", "--mode", "magic"]])
def test_qdm_unsupported(capsys, argv):
    code = _exit_code(argv)
    _, err = capsys.readouterr()
    assert code == 2 and err


def test_verify_only_appendix(capsys):
    code, out, _ = run(capsys, "verify", "--only", "appendix")
    records = json.loads(out)
    assert code == 0
    assert records and all(r["name"].startswith("appendix.") for r in records)


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--only", "exponential", "--tolerance", "1e-15")
    assert code == 1
    assert any(not r["pass"] for r in json.loads(out))


def test_verify_small_cutoff(capsys):
    code, out, _ = run(capsys, "verify", "--cutoff", "8", "--margin", "2", "--only", "fock,qdm,u1")
    assert code == 0


def test_byte_identical_output(capsys):
    argv = ["evolve", "--atoms", "2", "--state", "atoms=ee;field=fock:0", "--t-max", "1", "--steps", "3",
            "--cutoff", "12", "--margin", "3", "--threads", "1"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
