import csv

import numpy as np
import pytest

from delayvar.cli import main
from delayvar.trajectory import HistoryFunction, affine_initial_guess, write_trajectory_csv

CLASSICAL = """\
# unit classical problem
problem.name = classical_quadratic
problem.n = 1
problem.r = 0.5
problem.T = 1
history.kind = constant
history.value = 0
endpoint.zeta = 1
solver.N = 16
identity.fubini_cases = 3
identity.pairing_cases = 50
identity.ibp_cases = 20
converge.levels = 4, 8
"""

DELAYED = """\
problem.name = point_delay_quadratic
problem.r = 0.5
problem.T = 1
history.value = 1
endpoint.zeta = 2
solver.N = 16
verify.threshold = 1e-4
converge.levels = 8, 16, 32
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("DELAYVAR_LOG", "quiet")
    return tmp_path


def write(path, text):
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_solve_then_verify_classical(workdir, capsys):
    cfg = write(workdir / "c.cfg", CLASSICAL)
    assert main(["solve", "--config", cfg, "--out", "o"]) == 0
    for name in ("trajectory.csv", "el_report.csv", "summary.csv", "plot.svg"):
        assert (workdir / "o" / name).stat().st_size > 0
    row = read_csv(workdir / "o" / "summary.csv")[0]
    assert float(row["J"]) == pytest.approx(0.5, abs=1e-12)
    assert row["converged"] == "true"
    svg = (workdir / "o" / "plot.svg").read_text()
    assert svg.count("<polyline") == 2 and "residual" in svg
    assert main(["verify", "--config", cfg, "--out", "o"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_solve_is_byte_identical(workdir):
    cfg = write(workdir / "d.cfg", DELAYED)
    assert main(["solve", "--config", cfg, "--out", "a"]) == 0
    assert main(["solve", "--config", cfg, "--out", "b"]) == 0
    for name in ("trajectory.csv", "el_report.csv"):
        assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()


def test_identity(workdir):
    cfg = write(workdir / "c.cfg", CLASSICAL)
    assert main(["identity", "--config", cfg, "--out", "i1", "--seed", "4"]) == 0
    assert main(["identity", "--config", cfg, "--out", "i2", "--seed", "4"]) == 0
    a = (workdir / "i1" / "identity_report.csv").read_bytes()
    assert a == (workdir / "i2" / "identity_report.csv").read_bytes()
    rows = read_csv(workdir / "i1" / "identity_report.csv")
    assert {r["suite"] for r in rows} >= {"fubini", "pairing_bound", "ibp_atoms", "ibp_density"}
    assert all(float(r["max_discrepancy"]) <= 1e-8 and r["passed"] == "true" for r in rows)


def test_converge(workdir):
    cfg = write(workdir / "d.cfg", DELAYED)
    assert main(["converge", "--config", cfg, "--out", "c"]) == 0
    rows = read_csv(workdir / "c" / "levels.csv")
    assert [int(r["N"]) for r in rows] == [8, 16, 32]


def test_verify_affine_guess_fails(workdir):
    cfg = write(workdir / "d.cfg", DELAYED)
    x = affine_initial_guess(HistoryFunction.constant(0.5, 1.0), 2.0, 1.0, 16)
    write_trajectory_csv(x, workdir / "guess.csv")
    assert main(["verify", "--config", cfg, str(workdir / "guess.csv")]) == 3


def test_verify_converged_delayed_passes(workdir):
    cfg = write(workdir / "d.cfg", DELAYED)
    assert main(["solve", "--config", cfg, "--out", "s"]) == 0
    assert main(["verify", "--config", cfg, "--out", "s"]) == 0


def test_threshold_flag(workdir):
    cfg = write(workdir / "d.cfg", DELAYED)
    assert main(["solve", "--config", cfg, "--out", "s"]) == 0
    assert main(["verify", "--config", cfg, "--out", "s", "--threshold", "1e-12"]) == 3


@pytest.mark.parametrize(
    "text, needle",
    [
        (CLASSICAL.replace("problem.r = 0.5", "problem.r = 1.5"), "r < T"),
        (CLASSICAL.replace("problem.r = 0.5", "problem.r = 0.3").replace("solver.N = 16", "solver.N = 10"), "N=10"),
        (CLASSICAL.replace("history.kind = constant", "history.kind constant"), ":6:"),
        (CLASSICAL.replace("problem.name = classical_quadratic", "problem.name = nope"), "unknown problem"),
        (CLASSICAL + "solver.N = 8\n", "duplicate"),
        (CLASSICAL.replace("endpoint.zeta = 1", ""), "endpoint.zeta"),
    ],
)
def test_config_errors(workdir, capsys, text, needle):
    cfg = write(workdir / "bad.cfg", text)
    assert main(["solve", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and needle in err


def test_incommensurate_message_names_parameters(workdir, capsys):
    text = CLASSICAL.replace("problem.r = 0.5", "problem.r = 0.3").replace("solver.N = 16", "solver.N = 10")
    assert main(["solve", "--config", write(workdir / "g.cfg", text)]) == 1
    err = capsys.readouterr().err
    assert "r=0.3" in err and "T=1" in err


def test_missing_config(workdir):
    assert main(["solve", "--config", str(workdir / "nope.cfg")]) == 1


def test_verify_empty_trajectory(workdir):
    cfg = write(workdir / "c.cfg", CLASSICAL)
    (workdir / "empty.csv").write_text("")
    assert main(["verify", "--config", cfg, str(workdir / "empty.csv")]) == 1


def test_verify_dimension_mismatch(workdir):
    cfg = write(workdir / "c.cfg", CLASSICAL)
    x = affine_initial_guess(HistoryFunction.constant(0.5, [0.0, 0.0]), [1.0, 1.0], 1.0, 16)
    write_trajectory_csv(x, workdir / "two.csv")
    assert main(["verify", "--config", cfg, str(workdir / "two.csv")]) == 1


def test_not_converged_exit_2(workdir):
    cfg = write(workdir / "d.cfg", DELAYED + "solver.max_iters = 1\n")
    assert main(["solve", "--config", cfg, "--out", "s"]) == 2


def test_samples_history(workdir):
    theta = np.linspace(-0.5, 0, 11)
    np.savetxt(workdir / "psi.csv", np.column_stack([theta, 1 + theta]), delimiter=",")
    text = DELAYED.replace("history.value = 1", "history.kind = samples\nhistory.file = psi.csv")
    cfg = write(workdir / "s.cfg", text)
    assert main(["solve", "--config", cfg, "--out", "s"]) == 0


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "delayvar", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("solve", "verify", "identity", "converge"):
        assert cmd in out.stdout
