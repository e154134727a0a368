"""Driven three-level transmon: Hamiltonian, DRAG, open-system gate runs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InputError
from .geompath import PulseSchedule
from .qcore import (
    CollapseChannel,
    QuantumChannel,
    TimeGrid,
    Trajectory,
    evolve_channel_basis,
    propagate_lindblad,
    state_fidelity,
)
from .units import two_pi_mhz

DEFAULT_DT = 0.01
DEFAULT_THETA_SAMPLES = 1001
MAX_CSV_ROWS = 2000

SIGMA_1 = np.array([[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]], dtype=complex)
SIGMA_2 = np.diag([0.0, 1.0, 2.0]).astype(complex)


@dataclass(frozen=True)
class TransmonParams:
    """Transmon constants in rad/ns."""

    alpha: float
    gamma1: float
    gamma2: float
    omega_max: float

    def __post_init__(self):
        for name in ("alpha", "gamma1", "gamma2", "omega_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"{name} must be finite")
        if self.alpha <= 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise InputError("decay and dephasing rates must be >= 0")
        if self.omega_max <= 0:
            raise InputError("omega_max must be positive")

    @classmethod
    def reference(cls, gamma: float | None = None) -> "TransmonParams":
        """alpha = 2pi x 300 MHz, Gamma1 = Gamma2 = 2pi x 2 kHz, Omega_max = 2pi x 16 MHz."""
        g = two_pi_mhz(2e-3) if gamma is None else gamma
        return cls(alpha=two_pi_mhz(300.0), gamma1=g, gamma2=g, omega_max=two_pi_mhz(16.0))


@dataclass(frozen=True)
class DragConfig:
    """Leakage model switches.

    mode
        ``"derivative"`` replaces the envelope ``E`` by ``E - i dE/dt / alpha`` on
        both transitions (first-order DRAG for a ``|2>`` level at ``-alpha``);
        ``"off"`` drives with ``E`` unchanged.
    leak_coupling
        ``"ladder"`` couples ``|1>-|2>`` with ``sqrt(2) E / 2`` (harmonic ladder,
        consistent with the ``E/2`` on ``|0>-|1>``); ``"literal"`` uses
        ``sqrt(2) E``.
    """

    mode: Literal["off", "derivative"] = "derivative"
    leak_coupling: Literal["ladder", "literal"] = "ladder"

    def __post_init__(self):
        if self.mode not in ("off", "derivative"):
            raise InputError(f"unknown DRAG mode {self.mode!r}")
        if self.leak_coupling not in ("ladder", "literal"):
            raise InputError(f"unknown leak coupling {self.leak_coupling!r}")

    @property
    def coupling_factor(self) -> float:
        return math.sqrt(2) / 2 if self.leak_coupling == "ladder" else math.sqrt(2)


class QutritHamiltonian:
    """Rotating-frame transmon Hamiltonian driven by ``schedule``.

    ``decouple_leakage`` emulates the infinite-anharmonicity (ideal qubit)
    limit: the ``|1>-|2>`` coupling is zeroed and the DRAG term, which scales
    as ``1/alpha``, is dropped.
    """

    def __init__(self, schedule: PulseSchedule, params: TransmonParams,
                 drag: DragConfig = DragConfig(), decouple_leakage: bool = False):
        self.schedule = schedule
        self.params = params
        self.drag = drag
        self.decouple_leakage = decouple_leakage
        env = schedule.envelope
        if drag.mode == "derivative" and not decouple_leakage:
            env = env - 1j * schedule.envelope_derivative() / params.alpha
        self._env = env

    def envelope_at(self, t):
        return np.interp(t, self.schedule.times, self._env.real) + 1j * np.interp(
            t, self.schedule.times, self._env.imag)

    def sample(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.schedule.check_time(times)
        e = self.envelope_at(times)
        c = 0.0 if self.decouple_leakage else self.drag.coupling_factor
        h = np.zeros((times.size, 3, 3), dtype=complex)
        h[:, 0, 1] = 0.5 * e
        h[:, 1, 0] = 0.5 * np.conj(e)
        h[:, 1, 2] = c * e
        h[:, 2, 1] = c * np.conj(e)
        h[:, 2, 2] = -self.params.alpha
        return h

    def __call__(self, t):
        return self.sample(np.array([t]))[0]


def qutrit_hamiltonian(schedule: PulseSchedule, params: TransmonParams, drag: DragConfig, t: float) -> np.ndarray:
    return QutritHamiltonian(schedule, params, drag)(t)


def collapse_channels(params: TransmonParams) -> list[CollapseChannel]:
    return [CollapseChannel(SIGMA_1, params.gamma1), CollapseChannel(SIGMA_2, params.gamma2)]


def gate_grid(schedule: PulseSchedule, dt: float = DEFAULT_DT) -> TimeGrid:
    return TimeGrid.from_dt(0.0, schedule.tau, dt)


def simulate_gate(schedule: PulseSchedule, params: TransmonParams, drag: DragConfig, rho0,
                  dt: float = DEFAULT_DT, record_every: float | None = 0.1,
                  decouple_leakage: bool = False) -> Trajectory:
    """Master-equation run of one gate from ``rho0`` (3x3).

    ``record_every`` (ns) sets the trajectory cadence; it is never finer than
    one integration step. ``None`` keeps only the endpoints.
    """
    grid = gate_grid(schedule, dt)
    stride = None if record_every is None else max(1, int(round(record_every / grid.dt)))
    ham = QutritHamiltonian(schedule, params, drag, decouple_leakage)
    return propagate_lindblad(ham, collapse_channels(params), rho0, grid, stride=stride)


def gate_channel(schedule: PulseSchedule, params: TransmonParams, drag: DragConfig,
                 dt: float = DEFAULT_DT, decouple_leakage: bool = False) -> QuantumChannel:
    """Channel on inputs supported in the qubit subspace ``{|0>, |1>}``."""
    ham = QutritHamiltonian(schedule, params, drag, decouple_leakage)
    return evolve_channel_basis(ham, collapse_channels(params), gate_grid(schedule, dt), 3, support=(0, 1))


def theta_inputs(theta_samples: int = DEFAULT_THETA_SAMPLES) -> np.ndarray:
    """``cos(theta)|0> + sin(theta)|1>`` on a uniform grid over [0, 2pi] (endpoints included)."""
    if int(theta_samples) != theta_samples or theta_samples < 2:
        raise InputError(f"theta_samples must be an integer >= 2, got {theta_samples}")
    th = np.linspace(0.0, 2 * np.pi, int(theta_samples))
    return np.stack([np.cos(th), np.sin(th)], axis=1).astype(complex)


def gate_fidelity_1q(channel: QuantumChannel, target, theta_samples: int = DEFAULT_THETA_SAMPLES) -> float:
    """Mean state fidelity over the theta family of inputs.

    ``target`` is the 2x2 ideal gate; ideal outputs are embedded in the qutrit.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2):
        raise InputError("target must be a 2x2 matrix")
    ins = theta_inputs(theta_samples)
    outs = ins @ target.T
    return float(np.mean(channel.pure_state_fidelities(ins, outs)))


def leakage(rho) -> float:
    return float(np.real(np.asarray(rho)[2, 2]))


def trajectory_rows(traj: Trajectory, target_state, max_rows: int = MAX_CSV_ROWS):
    """``(t, p0, p1, p2, fidelity)`` rows, downsampled to at most ``max_rows``.

    The final sample is always kept, so the last fidelity equals the state
    fidelity of the run.
    """
    n = traj.times.size
    step = max(1, math.ceil(n / max_rows))
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        if len(idx) >= max_rows:
            idx[-1] = n - 1
        else:
            idx.append(n - 1)
    pops = traj.populations()
    rows = []
    for i in idx:
        f = state_fidelity(traj.states[i], target_state)
        rows.append((float(traj.times[i]), *map(float, pops[i]), f))
    return rows


def write_trajectory_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_ns", "p0", "p1", "p2", "fidelity"])
        for r in rows:
            w.writerow([repr(v) for v in r])
