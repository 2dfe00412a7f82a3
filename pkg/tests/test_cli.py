import json
import subprocess
import sys

import numpy as np
import pytest

from wickcgl.harness.checkpoint import load_checkpoint
from wickcgl.harness.cli import EXIT_BLOWUP, EXIT_PASS, EXIT_USAGE, main

SMALL_COUPLING = """\
experiment = "coupling"
seed = 3
[grid]
N = 4
[model]
mu = 2.0
tau = [1.0, 0.0]
[run]
horizon = 0.4
step = 0.01
ensemble = 2
sample_every = 1
[coupling]
lambdas = [10.0, 50.0]
accept_lambda = 50.0
"""

SMALL_WELLPOSED = """\
experiment = "wellposedness"
seed = 5
[grid]
N = 4
[run]
horizon = 0.2
step = 0.01
ensemble = 2
sample_every = 1
checkpoint_every = 10
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_verify_reports_are_byte_identical(tmp_path):
    assert main(["verify", "--seed", "42", "--out", str(tmp_path / "a")]) == EXIT_PASS
    assert main(["verify", "--seed", "42", "--out", str(tmp_path / "b")]) == EXIT_PASS
    a = (tmp_path / "a" / "verify_report.json").read_bytes()
    assert a == (tmp_path / "b" / "verify_report.json").read_bytes()
    assert main(["verify", "--seed", "42", "--out", str(tmp_path / "c"), "--threads", "2"]) == EXIT_PASS
    assert a == (tmp_path / "c" / "verify_report.json").read_bytes()


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert main(["run-coupling", "--config", str(tmp_path / "nope.toml")]) == EXIT_USAGE
    assert "not found" in capsys.readouterr().err


def test_unknown_key_is_usage_error(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.toml", 'experiment = "coupling"\n[run]\nhorizn = 1.0\n')
    assert main(["run-coupling", "--config", str(cfg)]) == EXIT_USAGE
    assert "horizn" in capsys.readouterr().err


def test_experiment_mismatch_and_bad_arguments(tmp_path):
    cfg = _write(tmp_path, "c.toml", SMALL_COUPLING)
    assert main(["run-ergodicity", "--config", str(cfg)]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE
    assert main(["verify", "--threads", "0"]) == EXIT_USAGE
    assert main(["verify", "--format", "xml"]) == EXIT_USAGE


def test_run_coupling_writes_c2_table(tmp_path):
    cfg = _write(tmp_path, "c.toml", SMALL_COUPLING)
    out = tmp_path / "out"
    code = main(["run-coupling", "--config", str(cfg), "--out", str(out)])
    report = json.loads((out / "coupling_report.json").read_text())
    assert [row["lambda"] for row in report["tables"]["C2"]] == [10.0, 50.0]
    assert code == (EXIT_PASS if report["passed"] else 1)
    assert main(["run-coupling", "--config", str(cfg), "--out", str(out), "--format", "csv"]) == code
    assert (out / "coupling_report.csv").read_text().startswith("experiment,observable,key")


def test_blowup_exit_code(tmp_path):
    cfg = _write(tmp_path, "w.toml", 'experiment = "wellposedness"\n[grid]\nN = 4\n'
                 '[run]\nhorizon = 0.2\nstep = 0.1\nensemble = 1\n[init]\nkind = "constant"\namplitude = 1e5\n')
    assert main(["run-wellposedness", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_BLOWUP


def test_resume_continues_to_horizon(tmp_path):
    cfg = _write(tmp_path, "w.toml", SMALL_WELLPOSED)
    out = tmp_path / "run"
    assert main(["run-wellposedness", "--config", str(cfg), "--out", str(out)]) == EXIT_PASS
    assert (out / "checkpoint_00000010.wcgl").exists()
    assert (out / "checkpoint_00000020.wcgl").exists()
    assert main(["resume", str(out / "checkpoint_00000010.wcgl"), "--out", str(tmp_path / "r")]) == EXIT_PASS
    final = load_checkpoint(tmp_path / "r" / "final.wcgl")
    unbroken = load_checkpoint(out / "checkpoint_00000020.wcgl")
    np.testing.assert_array_equal(final.state.v.coeffs, unbroken.state.v.coeffs)
    np.testing.assert_array_equal(final.state.noise.Z.coeffs, unbroken.state.noise.Z.coeffs)


def test_resume_rejects_corrupt_checkpoint(tmp_path):
    bad = tmp_path / "x.wcgl"
    bad.write_bytes(b"WCGL garbage garbage")
    assert main(["resume", str(bad)]) == EXIT_USAGE


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wickcgl", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "run-coupling" in out.stdout
