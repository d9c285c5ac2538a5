import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

TRACK_CFG = """
experiment = track-steady
spectral_width = 0.5
cavity_detuning = 0.5
drive_detuning = 0.1
n0 = 1e-5
omega_c = 10.0
t_final = 10.0
grid = 200
min_steps = 2000
"""

MIXED_CFG = """
experiment = invert-mixed
spectral_width = 0.1
cavity_detuning = 0.1
"""


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "blochsteer", *args],
                          capture_output=True, text=True)


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return header, data


def test_help():
    cp = run_cli("--help")
    assert cp.returncode == 0
    assert "--config" in cp.stdout


def test_track_steady_run(tmp_path):
    cfg = write_cfg(tmp_path, TRACK_CFG)
    out = tmp_path / "out"
    cp = run_cli("run", "--config", str(cfg), "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    header, data = read_csv(out / "states.csv")
    assert header == ["t", "r_x", "r_y", "r_z", "fidelity"]
    assert data.shape[0] == 201
    assert np.all(np.isfinite(data))
    assert data[:, 4].min() >= 0.999
    ctrl_header, ctrl = read_csv(out / "controls.csv")
    assert ctrl_header == ["t", "omega_x", "omega_y", "excitation"]
    env_header, envdata = read_csv(out / "env.csv")
    assert env_header == ["t", "decay_rate", "lamb_shift"]
    assert np.all(np.isfinite(envdata))
    assert "min_fidelity" in cp.stdout and "adiabatic_min_fidelity" in cp.stdout


def test_invert_mixed_derives_parameters(tmp_path):
    cfg = write_cfg(tmp_path, MIXED_CFG)
    out = tmp_path / "out"
    cp = run_cli("run", "--config", str(cfg), "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    summary = dict(line.split(" = ") for line in cp.stdout.strip().splitlines())
    assert abs(float(summary["drive_detuning"]) + 0.6792) < 0.01
    assert abs(float(summary["final_r_z"]) - 1.0) < 1e-3
    assert 0.0 < float(summary["t_break"]) < float(summary["t_final"])


def test_malformed_config_exits_2_without_files(tmp_path):
    cfg = write_cfg(tmp_path, "experiment = track-steady\nspectral_width = -3\n")
    out = tmp_path / "out"
    cp = run_cli("run", "--config", str(cfg), "--out", str(out))
    assert cp.returncode == 2
    assert "configuration error" in cp.stderr
    assert not out.exists()
    cfg2 = write_cfg(tmp_path, "experiment = track-steady\nwobble = 3\n", "bad.cfg")
    assert run_cli("run", "--config", str(cfg2)).returncode == 2
    assert run_cli("run", "--config", str(tmp_path / "missing.cfg")).returncode == 2


def test_reruns_are_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, TRACK_CFG)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_cli("run", "--config", str(cfg), "--out", str(out)).returncode == 0
        outs.append(out)
    for fname in ("states.csv", "controls.csv", "env.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_grid_and_override_flags(tmp_path):
    cfg = write_cfg(tmp_path, TRACK_CFG)
    out = tmp_path / "out"
    cp = run_cli("run", "--config", str(cfg), "--out", str(out), "--grid", "64",
                 "--override", "omega_c=5.0", "--override", "min_steps=1000")
    assert cp.returncode == 0, cp.stderr
    _, data = read_csv(out / "states.csv")
    assert data.shape[0] == 65
    _, ctrl = read_csv(out / "controls.csv")
    # ramp tops out at the overridden drive strength
    assert abs(ctrl[-1, 1]) < 6.0


def test_env_scan(tmp_path):
    cfg = write_cfg(tmp_path, """
experiment = env-scan
spectral_width = 0.1
cavity_detuning = 0.1
drive_detuning = 0.0
scan_parameter = spectral_width
scan_values = 0.1, 1.0, 10.0
t_final = 8.0
grid = 100
""")
    out = tmp_path / "scan"
    cp = run_cli("run", "--config", str(cfg), "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    files = sorted(out.glob("env_*.csv"))
    assert len(files) == 3
    for f in files:
        header, data = read_csv(f)
        assert header == ["t", "decay_rate", "lamb_shift"]
        assert data.shape == (101, 3)
        assert np.all(np.isfinite(data))


@pytest.mark.slow
def test_selfcheck_passes():
    import time
    start = time.perf_counter()
    cp = run_cli("selfcheck")
    elapsed = time.perf_counter() - start
    assert cp.returncode == 0, cp.stdout + cp.stderr
    assert cp.stdout.count("PASS") == 3
    assert elapsed < 60.0


@pytest.mark.slow
def test_selfcheck_fault_injection():
    cp = run_cli("selfcheck", "--perturb-f", "0.01")
    assert cp.returncode == 1
    assert "FAIL" in cp.stdout


def test_detuning_protocol_csv_columns(tmp_path, tracking_env):
    # the controls writer emits the detuning column when that protocol is used
    import numpy as np
    from blochsteer.cli import _write_run_files
    from blochsteer.controls import schedule_from_trajectory
    from blochsteer.simulator import integrate_bloch

    r_target = np.array([0.0, 0.45, -0.5])
    hold = type("Hold", (), {"t_final": 3.0,
                             "evaluate": staticmethod(lambda t: (r_target, np.zeros(3)))})()
    times = np.linspace(0.0, 3.0, 61)
    sched = schedule_from_trajectory(hold, tracking_env, times, protocol="x-detuning")
    run = integrate_bloch(sched, tracking_env, r_target, times, min_steps=600,
                          reference=lambda t: r_target)
    files = _write_run_files(tmp_path, times, sched, run, tracking_env)
    assert files == ["states.csv", "controls.csv", "env.csv"]
    header, data = read_csv(tmp_path / "controls.csv")
    assert header == ["t", "omega_x", "detuning_r", "excitation"]
    assert np.all(np.isfinite(data))


def test_inversion_setup_respects_overrides():
    from blochsteer.cli import ExperimentConfig, _derive_inversion_setup
    cfg = ExperimentConfig(experiment="invert-mixed", spectral_width=0.1,
                           cavity_detuning=0.1, drive_detuning=-0.7,
                           t_break=8.0, t_final=9.2).validate()
    env, t_break, t_final = _derive_inversion_setup(cfg)
    assert env.drive_detuning == -0.7
    assert t_break == 8.0 and t_final == 9.2
