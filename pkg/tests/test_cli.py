import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sseplab import cli


def write_cfg(tmp_path, name="cfg.json", **kw):
    cfg = {"schema": 1, "mode": "verify", "n": [4], "theta": [0.0],
           "alpha": 0.2, "beta": 0.8, "seed": "7"}
    cfg.update(kw)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv_body(path):
    """File contents minus the timestamp header line."""
    lines = open(path).read().splitlines()
    assert lines[0].startswith("# sseplab")
    return "\n".join(lines[1:])


def test_config_errors_name_the_field(tmp_path, capsys):
    cases = [
        ({"schema": 2}, "schema"),
        ({"mode": "dance"}, "mode"),
        ({"n": [2]}, "n"),
        ({"theta": [-1]}, "theta"),
        ({"alpha": 1.5}, "alpha"),
        ({"mode": "fluctuations", "replicas": 0, "times": [0.1]}, "replicas"),
        ({"mode": "profile", "times": []}, "times"),
        ({"tolerances": {"sigma": -1}}, "tolerances"),
        ({"initial_profile": "wiggle"}, "initial_profile"),
        ({"seed": "zz"}, "seed"),
    ]
    for patch, field in cases:
        path = write_cfg(tmp_path, **patch)
        rc = cli.run(path, out_dir=str(tmp_path / "out_bad"))
        err = capsys.readouterr().err
        assert rc == 2
        assert field in err
    assert not (tmp_path / "out_bad").exists()


def test_mode_mismatch_is_config_error(tmp_path, capsys):
    path = write_cfg(tmp_path, mode="verify")
    rc = cli.main(["profile", "--config", path,
                   "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "mode" in capsys.readouterr().err


def test_verify_mode_passes_and_reports(tmp_path):
    path = write_cfg(tmp_path, n=[4, 5], theta=[0.0, 1.0])
    out = tmp_path / "out"
    rc = cli.run(path, out_dir=str(out))
    assert rc == 0
    report = (out / "report.txt").read_text()
    for section in ("CHECKS", "PROVENANCE", "TIMING"):
        assert section in report
    assert "FAIL" not in report
    digest = hashlib.sha256(open(path, "rb").read()).hexdigest()
    assert f"sha256:{digest}" in report


def test_profile_mode_exact_csv_schema(tmp_path):
    path = write_cfg(tmp_path, mode="profile", times=[0.1, 0.5], n=[4],
                     theta=[0.0, 1.0])
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == 0
    lines = (out / "profile.csv").read_text().splitlines()
    assert lines[1] == "n,theta,alpha,beta,t,x,rho,stderr_or_0"
    # 2 theta values * 2 times * 5 lattice rows
    assert len(lines) == 2 + 2 * 2 * 5
    first = lines[2].split(",")
    assert first[0] == "4" and float(first[6]) == pytest.approx(0.2)


def test_correlation_mode_csv_schema(tmp_path):
    path = write_cfg(tmp_path, mode="correlations", times=[0.2], n=[5],
                     theta=[0.5])
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == 0
    lines = (out / "correlation.csv").read_text().splitlines()
    assert lines[1] == "n,theta,t,x,y,phi,stderr_or_0"
    assert len(lines) == 2 + 6    # pairs of V_5


def test_stationary_mode_emits_closed_forms(tmp_path):
    path = write_cfg(tmp_path, mode="stationary", n=[4], theta=[0.0])
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == 0
    body = read_csv_body(str(out / "correlation.csv"))
    row12 = [l for l in body.splitlines() if l.startswith("4,0,inf,1,2")]
    assert len(row12) == 1
    assert float(row12[0].split(",")[5]) == pytest.approx(-0.015)


def test_bounds_mode_csv(tmp_path):
    path = write_cfg(tmp_path, mode="bounds", n=[8, 16], theta=[0.0],
                     times=[0.1, 0.5, 1.0])
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == 0
    lines = (out / "bounds.csv").read_text().splitlines()
    assert lines[1] == "check_name,n,theta,t_or_range,value,envelope,margin"
    names = {l.split(",")[0] for l in lines[2:]}
    assert {"boundary-row-sup", "boundary-row-slope",
            "reflected-occupation-1d", "reflected-occupation-2d",
            "window-exponent"} <= names


def test_spectrum_mode(tmp_path):
    path = write_cfg(tmp_path, mode="spectrum", n=[4],
                     theta=[0.0, 1.0, 2.0], mu=[1.0, 2.0], modes=8)
    out = tmp_path / "out"
    assert cli.run(path, out_dir=str(out)) == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[1] == "regime,mu,k,eigenvalue,omega,amplitude"
    regimes = {l.split(",")[0] for l in lines[2:]}
    assert regimes == {"dirichlet", "robin", "neumann"}


def test_fluctuations_mode_and_forced_failure(tmp_path):
    base = dict(mode="fluctuations", n=[6], theta=[0.0], times=[0.3],
                replicas=400, f="one", burn_in=0.5)
    path = write_cfg(tmp_path, **base)
    out = tmp_path / "out"
    rc = cli.run(path, out_dir=str(out))
    assert rc == 0
    lines = (out / "fluctuations.csv").read_text().splitlines()
    assert lines[1] == "n,theta,s,t,f,g,mc,stderr,predicted,margin"
    # an absurd tolerance turns the same numbers into a failed check
    path2 = write_cfg(tmp_path, name="cfg2.json",
                      tolerances={"sigma": 1e-12}, **base)
    rc2 = cli.run(path2, out_dir=str(tmp_path / "out2"))
    assert rc2 == 1
    assert "FAIL" in (tmp_path / "out2" / "report.txt").read_text()


def test_rerun_is_byte_identical_modulo_timestamp(tmp_path):
    path = write_cfg(tmp_path, mode="profile", times=[0.2], n=[4],
                     theta=[1.0], replicas=300)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.run(path, out_dir=str(out1)) == 0
    assert cli.run(path, out_dir=str(out2)) == 0
    assert read_csv_body(str(out1 / "profile.csv")) \
        == read_csv_body(str(out2 / "profile.csv"))


def test_seed_precedence(tmp_path, monkeypatch):
    path = write_cfg(tmp_path, mode="profile", times=[0.2], n=[4],
                     theta=[1.0], replicas=300)
    out1, out2, out3 = (tmp_path / x for x in ("s1", "s2", "s3"))
    cli.run(path, out_dir=str(out1))
    monkeypatch.setenv("SSEPLAB_SEED", "999")
    cli.run(path, out_dir=str(out2))
    cli.run(path, out_dir=str(out3), seed_override="7")
    a = read_csv_body(str(out1 / "profile.csv"))
    b = read_csv_body(str(out2 / "profile.csv"))
    c = read_csv_body(str(out3 / "profile.csv"))
    assert a != b          # env var overrides the config seed
    assert a == c          # explicit seed wins and matches the config value


def test_console_script_smoke(tmp_path):
    path = write_cfg(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "sseplab.cli", "verify", "--config", path,
         "--out", str(tmp_path / "o")],
        capture_output=True, text=True)
    assert proc.returncode == 0


def test_full_double_precision_in_csv(tmp_path):
    path = write_cfg(tmp_path, mode="stationary", n=[5], theta=[0.5])
    out = tmp_path / "out"
    cli.run(path, out_dir=str(out))
    body = read_csv_body(str(out / "profile.csv"))
    val = [l for l in body.splitlines()[1:] if l.split(",")[5] == "1"][0]
    rho = val.split(",")[6]
    assert len(rho.replace("-", "").replace(".", "").lstrip("0")) >= 15


def test_jobs_flag_keeps_outputs_deterministic(tmp_path):
    path = write_cfg(tmp_path, mode="profile", times=[0.1, 0.3],
                     n=[4, 5, 6], theta=[0.0, 1.0])
    out1, out2 = tmp_path / "j1", tmp_path / "j2"
    assert cli.run(path, jobs=1, out_dir=str(out1)) == 0
    assert cli.run(path, jobs=3, out_dir=str(out2)) == 0
    assert read_csv_body(str(out1 / "profile.csv")) \
        == read_csv_body(str(out2 / "profile.csv"))


def test_runtime_failure_is_flagged_incomplete(tmp_path, capsys):
    # n = 3 has no closed-form two-point field: the prediction step raises
    # mid-run and the report must say so (exit 1, partial outputs flagged)
    path = write_cfg(tmp_path, mode="fluctuations", n=[3], theta=[0.0],
                     times=[0.1], replicas=50, burn_in=0.1)
    out = tmp_path / "out"
    rc = cli.run(path, out_dir=str(out))
    assert rc == 1
    assert "INCOMPLETE" in (out / "report.txt").read_text()
