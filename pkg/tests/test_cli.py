"""CLI surface: output shapes, exit codes, and stream discipline."""

import math
import subprocess
import sys

import pytest

from doblab.cli import main

SERVO_BASE = """
jm = 0.003
kt = 0.25
alpha = 1.0
gdob = 5000
ts = 1e-4
kp = 1000
kd = 25
reference = step
step_amplitude = 1.0
duration = 0.005
"""


def _run(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def _rows(text):
    lines = text.splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# --------------------------------------------------------------------- freq


def test_freq_discrete_inner(capsys):
    rc, out, err = _run(
        capsys,
        [
            "freq", "--domain", "z", "--loop", "inner",
            "--alpha", "1", "--gdob", "500", "--ts", "1e-3", "--points", "64",
        ],
    )
    assert rc == 0 and err == ""
    header, rows = _rows(out)
    assert header == ["omega_rad_s", "mag_S", "phase_S_rad", "mag_T", "phase_T_rad"]
    assert len(rows) == 64
    assert float(rows[0][0]) == 0.0
    last = rows[-1]
    assert float(last[0]) == pytest.approx(math.pi / 1e-3, rel=1e-15)
    # x = 0.5: |S| = 2/1.5 and |T| = 0.5/1.5 exactly at Nyquist
    assert float(last[1]) == pytest.approx(2.0 / 1.5, rel=1e-12)
    assert float(last[3]) == pytest.approx(0.5 / 1.5, rel=1e-12)


def test_freq_continuous_outer(capsys):
    rc, out, err = _run(
        capsys,
        [
            "freq", "--domain", "s", "--loop", "outer",
            "--alpha", "0.01", "--gdob", "750", "--kp", "1000", "--kd", "250",
            "--points", "16", "--wmin", "0.1", "--wmax", "1e5",
        ],
    )
    assert rc == 0 and err == ""
    header, rows = _rows(out)
    assert len(rows) == 16
    assert float(rows[0][0]) == pytest.approx(0.1, rel=1e-15)
    assert float(rows[-1][0]) == pytest.approx(1e5, rel=1e-12)
    # near DC the position loop tracks: S small, T near 1
    assert float(rows[0][1]) < 1e-4
    assert float(rows[0][3]) == pytest.approx(1.0, abs=1e-4)


def test_freq_missing_gains(capsys):
    rc, out, err = _run(
        capsys,
        [
            "freq", "--domain", "s", "--loop", "outer",
            "--alpha", "1", "--gdob", "750", "--kp", "1000",
        ],
    )
    assert rc == 1 and out == ""
    assert "error:" in err and "--kp and --kd" in err


def test_freq_discrete_needs_ts(capsys):
    rc, _, err = _run(
        capsys,
        ["freq", "--domain", "z", "--loop", "inner", "--alpha", "1", "--gdob", "500"],
    )
    assert rc == 1
    assert "--domain z needs --ts" in err


def test_freq_rejects_single_point(capsys):
    rc, _, err = _run(
        capsys,
        [
            "freq", "--domain", "z", "--loop", "inner",
            "--alpha", "1", "--gdob", "500", "--ts", "1e-3", "--points", "1",
        ],
    )
    assert rc == 1
    assert "--points" in err


# -------------------------------------------------------------- constraints


def test_constraints_report(capsys):
    rc, out, err = _run(
        capsys,
        [
            "constraints", "--alpha", "1", "--gdob", "500", "--ts", "1e-3",
            "--gammaS", "0.5", "--gammaT", "0.5",
        ],
    )
    assert rc == 0 and err == ""
    header, rows = _rows(out)
    assert header == ["constraint", "result", "margin"]
    table = {name: (result, float(margin)) for name, result, margin in rows}
    assert set(table) == {"inner", "ringing", "s_peak", "t_peak"}
    assert table["inner"] == ("pass", pytest.approx(1.5))
    assert table["ringing"][0] == "pass"
    assert table["s_peak"] == ("pass", pytest.approx(0.5))
    assert table["t_peak"][0] == "pass"


def test_constraints_with_outer_gains(capsys):
    rc, out, _ = _run(
        capsys,
        [
            "constraints", "--alpha", "1", "--gdob", "2500", "--ts", "1e-3",
            "--gammaS", "0.5", "--gammaT", "0.5", "--kp", "1000", "--kd", "250",
        ],
    )
    assert rc == 0
    _, rows = _rows(out)
    table = {name: result for name, result, _ in rows}
    # x = 2.5: everything inner fails, the outer gain inequality still holds
    assert table["inner"] == "fail"
    assert table["ringing"] == "fail"
    assert table["s_peak"] == "fail"
    assert table["outer_gain"] == "pass"


# --------------------------------------------------------------------- tune


def test_tune_prints_bandwidth(capsys):
    rc, out, err = _run(
        capsys,
        ["tune", "--alpha", "1", "--ts", "1e-3", "--gammaS", "0.5", "--gammaT", "0.5"],
    )
    assert rc == 0 and err == ""
    assert out == "1000\n"


# ------------------------------------------------------------ bode-integral


def test_bode_integral_report(capsys):
    rc, out, err = _run(
        capsys,
        [
            "bode-integral", "--domain", "s", "--loop", "inner",
            "--alpha", "1", "--gdob", "100",
        ],
    )
    assert rc == 0 and err == ""
    lines = out.splitlines()
    keys = [line.split(":")[0] for line in lines]
    assert keys == ["value", "rhp_pole_sum", "limit_term", "predicted", "quadrature_error"]
    values = {k: float(line.split(":")[1]) for k, line in zip(keys, lines)}
    assert values["predicted"] == pytest.approx(-50.0 * math.pi, rel=1e-12)
    assert values["value"] == pytest.approx(values["predicted"], rel=1e-3)


def test_bode_integral_discrete_balances(capsys):
    rc, out, err = _run(
        capsys,
        [
            "bode-integral", "--domain", "z", "--loop", "inner",
            "--alpha", "1", "--gdob", "500", "--ts", "1e-3",
        ],
    )
    assert rc == 0 and err == ""
    values = {line.split(":")[0]: float(line.split(":")[1]) for line in out.splitlines()}
    assert values["predicted"] == 0.0
    assert abs(values["value"]) <= 1e-3


# ---------------------------------------------------------------- rootlocus


LOCUS_ARGS = [
    "rootlocus", "--domain", "z", "--loop", "outer",
    "--alpha", "1", "--gdob", "750", "--ts", "1e-3",
    "--kp", "1000", "--kd", "250",
    "--sweep", "alpha", "--start", "1", "--stop", "5", "--count", "9",
]


def test_rootlocus_sweep(capsys):
    rc, out, err = _run(capsys, LOCUS_ARGS)
    assert rc == 0 and err == ""
    header, rows = _rows(out)
    assert header[0] == "param" and header[-1] == "stable"
    assert header[1:-1] == [
        "re_pole_1", "im_pole_1", "re_pole_2", "im_pole_2",
        "re_pole_3", "im_pole_3", "re_pole_4", "im_pole_4",
    ]
    assert len(rows) == 9
    assert float(rows[0][0]) == 1.0 and rows[0][-1] == "1"
    assert float(rows[-1][0]) == 5.0 and rows[-1][-1] == "0"


def test_rootlocus_log_spacing(capsys):
    args = [
        "rootlocus", "--domain", "z", "--loop", "inner",
        "--alpha", "0.01", "--gdob", "100", "--ts", "1e-3",
        "--sweep", "gdob", "--start", "100", "--stop", "1e6",
        "--count", "5", "--log",
    ]
    rc, out, _ = _run(capsys, args)
    assert rc == 0
    _, rows = _rows(out)
    params = [float(r[0]) for r in rows]
    assert params[0] == pytest.approx(100.0, rel=1e-12)
    assert params[-1] == pytest.approx(1e6, rel=1e-12)
    # log spacing: constant ratio
    ratios = [b / a for a, b in zip(params[:-1], params[1:])]
    assert all(r == pytest.approx(ratios[0], rel=1e-9) for r in ratios)


def test_rootlocus_rejects_bad_range(capsys):
    rc, _, err = _run(
        capsys,
        [
            "rootlocus", "--domain", "z", "--loop", "inner",
            "--alpha", "1", "--gdob", "500", "--ts", "1e-3",
            "--sweep", "alpha", "--start", "5", "--stop", "1", "--count", "4",
        ],
    )
    assert rc == 1
    assert "--start < --stop" in err


def test_rootlocus_threads_env_identical(capsys, monkeypatch):
    rc, base, _ = _run(capsys, LOCUS_ARGS)
    assert rc == 0
    monkeypatch.setenv("DOBLAB_THREADS", "4")
    rc, threaded, _ = _run(capsys, LOCUS_ARGS)
    assert rc == 0
    assert threaded == base


def test_threads_env_validation(capsys, monkeypatch):
    monkeypatch.setenv("DOBLAB_THREADS", "lots")
    rc, _, err = _run(capsys, LOCUS_ARGS)
    assert rc == 1
    assert "DOBLAB_THREADS" in err


# ----------------------------------------------------------------- simulate


def test_simulate_step_scenario(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SERVO_BASE + "load = 0.004:0.5\n")
    rc, out, err = _run(capsys, ["simulate", "--scenario", str(cfg)])
    assert rc == 0 and err == ""
    header, rows = _rows(out)
    assert header == ["t", "q_ref", "q", "qdot", "u", "tau_d", "tau_d_hat"]
    assert len(rows) == 50
    assert float(rows[0][4]) == pytest.approx(1129.5, rel=1e-12)
    assert float(rows[0][5]) == 0.0
    # the load engages at t = 0.004
    assert float(rows[40][5]) == 0.5
    assert all(float(r[1]) == 1.0 for r in rows)


def test_simulate_trajectory_relative_path(tmp_path, capsys):
    samples = [math.sin(0.3 * k) for k in range(20)]
    traj = tmp_path / "traj.csv"
    lines = ["t,q_ref"] + [f"{k * 1e-4},{v}" for k, v in enumerate(samples)]
    traj.write_text("\n".join(lines) + "\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        """
jm = 0.003
kt = 0.25
alpha = 1.0
gdob = 5000
ts = 1e-4
reference = trajectory
trajectory_csv = traj.csv
duration = 0.002
"""
    )
    rc, out, err = _run(capsys, ["simulate", "--scenario", str(cfg)])
    assert rc == 0 and err == ""
    _, rows = _rows(out)
    assert len(rows) == 20
    got = [float(r[1]) for r in rows]
    assert got == pytest.approx(samples, rel=1e-15)


def test_simulate_divergence_note_on_stderr(tmp_path, capsys):
    cfg = tmp_path / "blow.cfg"
    text = SERVO_BASE.replace("gdob = 5000", "gdob = 25000")
    cfg.write_text(text.replace("duration = 0.005", "duration = 0.01"))
    rc, out, err = _run(capsys, ["simulate", "--scenario", str(cfg)])
    assert rc == 0
    assert "diverged at row" in err
    _, rows = _rows(out)
    assert len(rows) == 100
    assert any(r[2] == "nan" for r in rows)  # position column goes NaN
    assert all(r[1] == "1" for r in rows)  # reference stays filled


def test_simulate_missing_file(capsys, tmp_path):
    rc, out, err = _run(capsys, ["simulate", "--scenario", str(tmp_path / "nope.cfg")])
    assert rc == 1 and out == ""
    assert "scenario file not found" in err


def test_simulate_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(SERVO_BASE + "warp = 9\n")
    rc, _, err = _run(capsys, ["simulate", "--scenario", str(cfg)])
    assert rc == 1
    assert "unknown scenario key: warp" in err


def test_simulate_requires_gain_pair(tmp_path, capsys):
    cfg = tmp_path / "half.cfg"
    cfg.write_text(SERVO_BASE.replace("kd = 25\n", ""))
    rc, _, err = _run(capsys, ["simulate", "--scenario", str(cfg)])
    assert rc == 1
    assert "both kp and kd" in err


def test_simulate_rejects_bad_header(tmp_path, capsys):
    traj = tmp_path / "t.csv"
    traj.write_text("time,position\n0,0\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "jm = 0.003\nkt = 0.25\nalpha = 1\ngdob = 5000\nts = 1e-4\n"
        "reference = trajectory\ntrajectory_csv = t.csv\nduration = 1e-4\n"
    )
    rc, _, err = _run(capsys, ["simulate", "--scenario", str(cfg)])
    assert rc == 1
    assert "header must be t,q_ref" in err


# ------------------------------------------------------------------ general


def test_repeat_invocations_byte_identical(capsys):
    args = [
        "freq", "--domain", "z", "--loop", "inner",
        "--alpha", "1.3", "--gdob", "700", "--ts", "1e-3", "--points", "40",
    ]
    rc, first, _ = _run(capsys, args)
    assert rc == 0
    rc, second, _ = _run(capsys, args)
    assert rc == 0
    assert first == second


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["freq", "--domain", "q", "--loop", "inner", "--alpha", "1", "--gdob", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_module_entry_point_subprocess():
    proc = subprocess.run(
        [
            sys.executable, "-m", "doblab", "tune",
            "--alpha", "1", "--ts", "1e-3", "--gammaS", "0.5", "--gammaT", "0.5",
        ],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout == "1000\n"
    assert proc.stderr == ""
