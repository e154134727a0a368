"""Figure data with hard-coded reference parameters and a headline-number table."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import octrobust, transmon1q, twoq
from .geompath import build_x_rotation_path, build_z_rotation_path, path_target, synthesize_pulse
from .qcore import pure_density
from .scenario import TWO_QUBIT_LABELS, write_rows
from .units import to_two_pi_mhz, two_pi_mhz

FIGURES = ("fig2", "fig3a", "fig3bc", "fig4")


@dataclass(frozen=True)
class Check:
    """One headline number against its reference value."""

    name: str
    measured: float
    reference: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.measured - self.reference) <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name:<34} measured {self.measured:.6g}  "
                f"reference {self.reference:.6g} +/- {self.tolerance:.3g}")


def _property(name: str, ok: bool) -> Check:
    return Check(name, float(ok), 1.0, 0.0)


def fig2(out: Path, dt: float = transmon1q.DEFAULT_DT) -> list[Check]:
    """Pulses and population dynamics of the NOT and Phase gates."""
    params = transmon1q.TransmonParams.reference()
    drag = transmon1q.DragConfig()
    cases = [
        ("not", build_x_rotation_path(math.pi / 2), np.array([1.0, 0.0]), 0.9987, 0.9987, 102.0),
        ("phase", build_z_rotation_path(-math.pi / 8, 0.2), np.array([1.0, 1.0]) / math.sqrt(2), 0.9980, 0.9984, 125.0),
    ]
    checks = []
    for label, path, psi0, f_state, f_gate, tau in cases:
        sched = synthesize_pulse(path, omega_max=params.omega_max)
        target = path_target(path)
        traj = transmon1q.simulate_gate(sched, params, drag, pure_density(psi0, 3), dt=dt)
        rows = transmon1q.trajectory_rows(traj, target @ psi0)
        chan = transmon1q.gate_channel(sched, params, drag, dt=dt)
        sched.write(out / f"fig2_{label}_pulse.csv", out / f"fig2_{label}_pulse.json")
        transmon1q.write_trajectory_csv(out / f"fig2_{label}_trajectory.csv", rows)
        checks += [
            Check(f"{label} state fidelity", rows[-1][-1], f_state, 0.0015),
            Check(f"{label} gate fidelity", transmon1q.gate_fidelity_1q(chan, target), f_gate, 0.0015),
            Check(f"{label} duration (ns)", sched.tau, tau, 3.0),
        ]
    return checks


def _phase_spec(eta: float) -> octrobust.GateSpec:
    return octrobust.GateSpec(family="z-rotation", gamma=-math.pi / 8, eta=eta)


def fig3a(out: Path, epsilon_points: int = octrobust.DEFAULT_EPSILON_POINTS,
          dt: float = transmon1q.DEFAULT_DT, workers: int | None = None) -> list[Check]:
    """Fidelity against the amplitude error without decoherence, eta = 0 and 1."""
    grid = octrobust.SweepGrid.default(epsilon_points=epsilon_points, gamma_points=1)
    r0 = octrobust.robustness_sweep(_phase_spec(0.0), grid, decoherence_on=False, dt=dt, workers=workers)
    r1 = octrobust.robustness_sweep(_phase_spec(1.0), grid, decoherence_on=False, dt=dt, workers=workers)
    eps = np.array(grid.epsilon_values)
    amp = to_two_pi_mhz(eps * r0.spec.omega_max)
    write_rows(out / "fig3a.csv", ["epsilon", "error_two_pi_mhz", "fidelity_eta0", "fidelity_eta1"],
               zip(eps, amp, r0.fidelity[:, 0], r1.fidelity[:, 0]))
    far = np.abs(amp) >= 2.5 - 1e-9
    better = bool(np.all(r1.fidelity[far, 0] > r0.fidelity[far, 0]))
    return [
        Check("eta=0 duration (ns)", r0.tau, 98.2, 0.5),
        Check("eta=1 duration (ns)", r1.tau, 405.0, 10.0),
        _property("eta=1 beats eta=0 for |err|>=2.5MHz", better),
    ]


def fig3bc(out: Path, epsilon_points: int = octrobust.DEFAULT_EPSILON_POINTS,
           gamma_points: int = octrobust.DEFAULT_GAMMA_POINTS,
           dt: float = transmon1q.DEFAULT_DT, workers: int | None = None) -> list[Check]:
    """Fidelity over amplitude error and decoherence rate for eta = 0 and 1."""
    grid = octrobust.SweepGrid.default(epsilon_points=epsilon_points, gamma_points=gamma_points)
    checks = []
    results = {}
    for eta, name in ((0.0, "fig3b_eta0"), (1.0, "fig3c_eta1")):
        res = octrobust.robustness_sweep(_phase_spec(eta), grid, dt=dt, workers=workers)
        res.write_csv(out / f"{name}.csv")
        res.write_json(out / f"{name}.json")
        results[eta] = res.fidelity
    eps = np.abs(np.array(grid.epsilon_values)) * two_pi_mhz(16.0)
    far = eps >= two_pi_mhz(2.5) - 1e-12
    checks.append(_property("eta=1 beats eta=0 at Gamma=0, |err|>=2.5MHz",
                            bool(np.all(results[1.0][far, 0] > results[0.0][far, 0]))))
    return checks


def fig4(out: Path, dt: float = twoq.DEFAULT_DT, samples: int = twoq.DEFAULT_FIDELITY_SAMPLES,
         layout: str = "grid+corner") -> list[Check]:
    """Modulation envelope, state dynamics and gate fidelity of the control-phase gate."""
    params = twoq.TwoTransmonParams.reference()
    gp = math.pi / 2
    drive, sched = twoq.build_cphase_drive(gp, 250.0, params)
    drive.write_csv(out / "fig4_drive.csv")
    psi0 = twoq.product_inputs(np.array([[math.pi / 4, math.pi / 4]]))[0]
    psi_t = psi0.copy()
    psi_t[twoq.level(1, 1)] *= np.exp(1j * gp)
    traj = twoq.simulate_cphase(params, drive, pure_density(psi0), dt)
    pops = traj.populations()
    step = max(1, math.ceil(traj.times.size / transmon1q.MAX_CSV_ROWS))
    idx = sorted(set(range(0, traj.times.size, step)) | {traj.times.size - 1})
    fid = [float(np.real(np.vdot(psi_t, traj.states[i] @ psi_t))) for i in idx]
    write_rows(out / "fig4_trajectory.csv", ["t_ns", *TWO_QUBIT_LABELS, "fidelity"],
               [(traj.times[i], *pops[i], f) for i, f in zip(idx, fid)])
    chan = twoq.cphase_channel(params, drive, dt)
    fg = twoq.gate_fidelity_2q(chan, gp, samples, layout)
    return [
        Check("peak g' (2pi MHz)", to_two_pi_mhz(sched.peak), 8.0, 0.5),
        Check("two-qubit gate fidelity", fg, 0.9953, 0.0025),
    ]


def reproduce(figure: str, out: Path, **opts) -> list[Check]:
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    checks = {"fig2": fig2, "fig3a": fig3a, "fig3bc": fig3bc, "fig4": fig4}[figure](out, **opts)
    lines = [c.line() for c in checks]
    (out / f"{figure}_summary.txt").write_text("\n".join(lines) + "\n")
    return checks
