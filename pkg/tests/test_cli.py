import csv
import json
import math
import subprocess
import sys
import textwrap

import pytest

from geomgate import figures
from geomgate.cli import main
from geomgate.errors import ConfigError
from geomgate.geompath import PulseSchedule
from geomgate.scenario import FidelityReport, load_scenario, parse_scenario

PHASE = """
kind = "single-qubit-gate"
output = "{out}"

[gate]
family = "z-rotation"
gamma = -0.39269908169872414
eta = 0.2

[device]
units = "two_pi_mhz"
alpha = 300.0
gamma1 = {gamma1}
gamma2 = 0.002
omega_max = 16.0
"""


def write_config(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


@pytest.fixture(scope="module")
def phase_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("phase")
    cfg = write_config(tmp, PHASE.format(out="a", gamma1=0.002))
    assert main(["run", str(cfg)]) == 0
    return tmp


def test_minimal_z_scenario(phase_run):
    rep = FidelityReport.from_json((phase_run / "a" / "report.json").read_text())
    assert rep.tau_ns == pytest.approx(125.0, abs=3.0)
    assert rep.phases["total"] == pytest.approx(-math.pi / 8, abs=1e-6)
    assert 0.99 < rep.state_fidelity < 1 and 0.99 < rep.gate_fidelity < 1
    for name in ("pulse.csv", "pulse.json", "trajectory.csv"):
        assert (phase_run / "a" / name).exists()


def test_report_round_trip(phase_run):
    text = (phase_run / "a" / "report.json").read_text()
    assert FidelityReport.from_json(text).to_json() == text


def test_report_echo_matches_trajectory(phase_run):
    rep = json.loads((phase_run / "a" / "report.json").read_text())
    with open(phase_run / "a" / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t_ns", "p0", "p1", "p2", "fidelity"]
    assert abs(float(rows[-1][-1]) - rep["state_fidelity"]) <= 1e-9
    assert float(rows[-1][0]) == pytest.approx(rep["tau_ns"])


def test_pulse_file_reloads(phase_run):
    sched = PulseSchedule.read(phase_run / "a" / "pulse.csv", phase_run / "a" / "pulse.json")
    assert sched.tau == pytest.approx(125.7, abs=0.1)


def test_rerun_is_byte_identical(phase_run):
    cfg = write_config(phase_run, PHASE.format(out="b", gamma1=0.002), "again.toml")
    assert main(["run", str(cfg)]) == 0
    for name in ("pulse.csv", "trajectory.csv", "report.json"):
        a, b = (phase_run / "a" / name).read_bytes(), (phase_run / "b" / name).read_bytes()
        if name == "report.json":
            a = a.replace(b'"a"', b'"b"')
        assert a == b


def test_negative_rate_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, PHASE.format(out="bad", gamma1=-0.002))
    assert main(["run", str(cfg)]) == 2
    assert "device.gamma1" in capsys.readouterr().err
    assert not (tmp_path / "bad").exists()


@pytest.mark.parametrize("edit,field", [
    (("family = \"z-rotation\"", "family = \"spiral\""), "gate.family"),
    (("units = \"two_pi_mhz\"", "units = \"GHz\""), "device.units"),
    (("gamma = -0.39269908169872414", "gamma = 4.0"), "gate.gamma"),
    (("eta = 0.2", "eta = 0.2\nwobble = 1"), "gate.wobble"),
])
def test_schema_errors_name_field(tmp_path, capsys, edit, field):
    cfg = write_config(tmp_path, PHASE.format(out="bad", gamma1=0.002).replace(*edit))
    assert main(["run", str(cfg)]) == 2
    assert field in capsys.readouterr().err
    assert not (tmp_path / "bad").exists()


def test_missing_config(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "nope.toml")


def test_rad_per_ns_units(tmp_path):
    doc = {"kind": "pulse-synthesis", "gate": {"family": "x-rotation", "gamma": 1.0},
           "device": {"units": "rad_per_ns", "omega_max": 0.1}}
    assert parse_scenario(doc).device["omega_max"] == 0.1


def test_numerical_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, PHASE.format(out="num", gamma1=0.002) + "\n[grid]\ndt = 3.0\n")
    assert main(["run", str(cfg)]) == 3
    assert "numerical failure in geomgate.qcore" in capsys.readouterr().err


def test_sweep_command(tmp_path):
    cfg = write_config(tmp_path, """
        kind = "robustness-sweep"
        output = "sw"

        [gate]
        family = "z-rotation"
        gamma = -0.39269908169872414
        eta = 1.0

        [device]
        units = "two_pi_mhz"
        alpha = 300.0
        gamma1 = 0.0
        gamma2 = 0.0
        omega_max = 16.0

        [sweep]
        epsilon = [-0.1, 0.1]
        gamma = [0.0, 0.004]
    """)
    assert main(["sweep", str(cfg)]) == 0
    rows = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert len(rows) == 3 and len(rows[0].split(",")) == 3
    meta = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert meta["shape"] == [2, 2]


def test_sweep_rejects_other_kinds(phase_run, capsys):
    cfg = write_config(phase_run, PHASE.format(out="c", gamma1=0.002), "c.toml")
    assert main(["sweep", str(cfg)]) == 2
    assert not (phase_run / "c").exists()


def test_synth_phase_gate(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["synth", "--gate", "z", "--gamma=-0.3927", "--eta=0.2", "-o", str(out)]) == 0
    text = capsys.readouterr().out
    tau = float(text.split("tau_ns = ")[1].split()[0])
    assert tau == pytest.approx(125.0, abs=3.0)
    assert out.read_text().startswith("t_ns,omega_rad_per_ns,phi_rad\n")
    assert out.with_suffix(".json").exists()


def test_synth_eta1(tmp_path, capsys):
    assert main(["synth", "--gate", "z", "--eta=1", "--gamma=-0.3927", "-o", str(tmp_path / "p.csv")]) == 0
    tau = float(capsys.readouterr().out.split("tau_ns = ")[1].split()[0])
    assert tau == pytest.approx(405.0, abs=10.0)


def test_synth_zero_angle_warns(tmp_path, capsys):
    assert main(["synth", "--gate", "z", "--gamma=0", "-o", str(tmp_path / "p.csv")]) == 0
    cap = capsys.readouterr()
    assert "identity" in cap.err
    assert abs(float(cap.out.split("gamma_total = ")[1].split()[0])) <= 1e-6


def test_synth_bad_flags(tmp_path):
    assert main(["synth", "--gate", "x", "--gamma=1.0", "--eta=0.5", "-o", str(tmp_path / "p.csv")]) == 2
    assert main(["synth", "--gate", "general", "--gamma=1.0", "-o", str(tmp_path / "p.csv")]) == 2
    assert main(["synth", "--gate", "z", "--gamma=1.0", "--samples", "10", "-o", str(tmp_path / "p.csv")]) == 2
    assert not (tmp_path / "p.csv").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "geomgate", "synth", "--gate", "x", "--gamma=1.5707963267948966",
                          "-o", str(tmp_path / "x.csv")], capture_output=True, text=True)
    assert res.returncode == 0
    assert float(res.stdout.split("tau_ns = ")[1].split()[0]) == pytest.approx(102.0, abs=3.0)


def test_reproduce_fig2(tmp_path, capsys):
    assert main(["reproduce", "fig2", "-o", str(tmp_path)]) == 0
    summary = (tmp_path / "fig2_summary.txt").read_text()
    assert "0.9987" in summary and "0.998" in summary
    assert summary.count("PASS") == 6
    assert (tmp_path / "fig2_not_trajectory.csv").exists()


def test_reproduce_strict_exit(tmp_path, monkeypatch):
    monkeypatch.setattr(figures, "reproduce", lambda fig, out, **kw: [figures.Check("x", 1.0, 0.0, 0.5)])
    assert main(["reproduce", "fig4", "-o", str(tmp_path)]) == 0
    assert main(["reproduce", "fig4", "-o", str(tmp_path), "--strict"]) == 1
