"""Systematic amplitude errors and robustness of the optimized Z-path family."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import InputError, NumericalError
from .geompath import (
    DEFAULT_SAMPLES,
    DriveHamiltonian,
    EvolutionPath,
    PulseSchedule,
    path_from_descriptor,
    path_target,
    synthesize_pulse,
)
from .qcore import TimeGrid, propagate_schrodinger
from .transmon1q import DEFAULT_DT, DragConfig, TransmonParams, gate_channel, gate_fidelity_1q
from .units import two_pi_mhz

MAX_EPSILON = 0.5
DEFAULT_EPSILON_POINTS = 41
DEFAULT_GAMMA_POINTS = 21
THREADS_ENV = "GEOMGATE_THREADS"


@dataclass(frozen=True)
class SystematicError:
    """Static fractional amplitude miscalibration, ``Omega -> (1 + epsilon) Omega``."""

    epsilon: float

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or abs(self.epsilon) > MAX_EPSILON:
            raise InputError(f"|epsilon| must be <= {MAX_EPSILON}, got {self.epsilon}")


def apply_error(schedule: PulseSchedule, err: SystematicError) -> PulseSchedule:
    """Scale the amplitude samples; phase and duration are untouched."""
    if err.epsilon == 0.0:
        return schedule
    return replace(schedule, omega=(1.0 + err.epsilon) * schedule.omega,
                   epsilon=schedule.epsilon + err.epsilon)


# -- second-order response ---------------------------------------------------

def o2_analytic(eta: float, epsilon: float) -> float:
    """Closed-form second-order overlap loss ``-eps^2 sin^2(pi eta) / (2 eta)^2``."""
    if eta < 0:
        raise InputError(f"eta must be >= 0, got {eta}")
    if eta > 0 and float(eta).is_integer():
        return 0.0
    # sin(pi eta) / (2 eta) = (pi / 2) sinc(eta); finite down to eta = 0
    return -((0.5 * math.pi * epsilon * float(np.sinc(eta))) ** 2)


def o2_numeric(eta: float, epsilon: float) -> float:
    """``-eps^2 |int_0^pi exp(-i f) sin^2 chi dchi|^2`` with ``f = eta (2 chi - sin 2 chi)``."""
    if eta < 0:
        raise InputError(f"eta must be >= 0, got {eta}")

    def f(c):
        return eta * (2 * c - math.sin(2 * c))

    opts = dict(limit=200, epsabs=1e-13, epsrel=1e-12, full_output=1)
    parts = []
    for fn in (math.cos, math.sin):
        res = integrate.quad(lambda c: fn(f(c)) * math.sin(c) ** 2, 0.0, math.pi, **opts)
        if len(res) > 3:
            raise NumericalError(f"quadrature did not converge for eta = {eta}")
        parts.append(res[0])
    return -(epsilon ** 2) * (parts[0] ** 2 + parts[1] ** 2)


def _check_z_path(path: EvolutionPath) -> None:
    if path.family != "z-rotation":
        raise InputError("perturbed_overlap needs a z-rotation path")


def perturbed_overlap(path: EvolutionPath, schedule: PulseSchedule, epsilon: float,
                      dt: float = DEFAULT_DT) -> float:
    """``|<psi(tau/2)|psi_eps(tau/2)>|^2`` under the ideal two-level drive."""
    _check_z_path(path)
    SystematicError(epsilon)
    grid = TimeGrid.from_dt(0.0, schedule.tau / 2, dt)
    psi0 = path.initial_state()
    a = propagate_schrodinger(DriveHamiltonian(schedule), grid) @ psi0
    b = propagate_schrodinger(DriveHamiltonian(schedule, 1.0 + epsilon), grid) @ psi0
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def o1_numeric(path: EvolutionPath, schedule: PulseSchedule, epsilon: float = 1e-3,
               dt: float = DEFAULT_DT) -> float:
    """Odd part ``(P(eps) - P(-eps)) / 2`` of the overlap; first order plus O(eps^3)."""
    return 0.5 * (perturbed_overlap(path, schedule, epsilon, dt)
                  - perturbed_overlap(path, schedule, -epsilon, dt))


# -- sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    """Sweep axes: dimensionless ``epsilon`` and decoherence rates in rad/ns."""

    epsilon_values: tuple
    gamma_values: tuple

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon_values)
        gam = tuple(float(g) for g in self.gamma_values)
        if not eps or not gam:
            raise InputError("sweep axes must be nonempty")
        if list(eps) != sorted(eps) or list(gam) != sorted(gam):
            raise InputError("sweep axes must be sorted ascending")
        for e in eps:
            SystematicError(e)
        if any(g < 0 or not math.isfinite(g) for g in gam):
            raise InputError("decoherence rates must be finite and >= 0")
        object.__setattr__(self, "epsilon_values", eps)
        object.__setattr__(self, "gamma_values", gam)

    @classmethod
    def default(cls, omega_max: float = two_pi_mhz(16.0), gamma_max: float = two_pi_mhz(4e-3),
                epsilon_points: int = DEFAULT_EPSILON_POINTS, gamma_points: int = DEFAULT_GAMMA_POINTS):
        """Error amplitude ``eps * omega_max`` over 2pi x [-5, 5] MHz and Gamma over [0, gamma_max]."""
        e = two_pi_mhz(5.0) / omega_max
        return cls(tuple(np.linspace(-e, e, epsilon_points)), tuple(np.linspace(0.0, gamma_max, gamma_points)))


@dataclass(frozen=True)
class GateSpec:
    """What to synthesize and how to simulate it."""

    family: str = "z-rotation"
    gamma: float = -math.pi / 8
    eta: float = 0.2
    chi0: float = 0.0
    beta0: float = 0.0
    omega_max: float = two_pi_mhz(16.0)
    alpha: float = two_pi_mhz(300.0)
    drag: DragConfig = field(default_factory=DragConfig)
    samples: int = DEFAULT_SAMPLES
    leakage: bool = True
    """``False`` simulates the two-level (infinite anharmonicity) limit."""

    def path(self) -> EvolutionPath:
        desc = {"family": self.family, "gamma": self.gamma}
        if self.family == "z-rotation":
            desc["eta"] = self.eta
        elif self.family == "general":
            desc.update(chi0=self.chi0, beta0=self.beta0)
        return path_from_descriptor(desc)

    def params(self, rate: float) -> TransmonParams:
        return TransmonParams(alpha=self.alpha, gamma1=rate, gamma2=rate, omega_max=self.omega_max)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drag"] = asdict(self.drag)
        return d


@dataclass(frozen=True)
class SweepResult:
    """Fidelity matrix indexed ``[epsilon, gamma]``."""

    spec: GateSpec
    grid: SweepGrid
    fidelity: np.ndarray
    dt: float
    tau: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon\\gamma_rad_per_ns"] + [repr(g) for g in self.grid.gamma_values])
            for e, row in zip(self.grid.epsilon_values, self.fidelity):
                w.writerow([repr(e)] + [repr(float(v)) for v in row])

    def metadata(self) -> dict:
        return {
            "gate": self.spec.to_dict(),
            "epsilon_values": list(self.grid.epsilon_values),
            "gamma_values_rad_per_ns": list(self.grid.gamma_values),
            "dt_ns": self.dt,
            "tau_ns": self.tau,
            "seed": None,
            "shape": list(self.fidelity.shape),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")


def worker_count(requested: int | None = None) -> int:
    """Worker processes: ``requested`` if given, capped by ``GEOMGATE_THREADS``."""
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def _point(args) -> float:
    spec, schedule, eps, rate, dt = args
    sched = apply_error(schedule, SystematicError(eps))
    ch = gate_channel(sched, spec.params(rate), spec.drag, dt, decouple_leakage=not spec.leakage)
    return gate_fidelity_1q(ch, path_target(spec.path()))


def robustness_sweep(spec: GateSpec, grid: SweepGrid, decoherence_on: bool = True,
                     dt: float = DEFAULT_DT, workers: int | None = 1) -> SweepResult:
    """Gate fidelity over every ``(epsilon, Gamma)`` pair.

    The schedule is synthesized once. With ``decoherence_on=False`` the rate
    axis collapses to ``[0.0]``. Results are assembled by grid index, so the
    matrix does not depend on worker count or completion order.
    """
    if not decoherence_on:
        grid = SweepGrid(grid.epsilon_values, (0.0,))
    schedule = synthesize_pulse(spec.path(), omega_max=spec.omega_max, samples=spec.samples)
    jobs = [(spec, schedule, e, g, dt) for e in grid.epsilon_values for g in grid.gamma_values]
    n = min(worker_count(workers), len(jobs))
    if n == 1:
        values = [_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            values = list(pool.map(_point, jobs))
    mat = np.array(values).reshape(len(grid.epsilon_values), len(grid.gamma_values))
    return SweepResult(spec=spec, grid=grid, fidelity=mat, dt=dt, tau=schedule.tau)
