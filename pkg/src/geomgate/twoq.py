"""Two transmons coupled through a parametrically modulated qubit frequency.

Modulating one transmon as ``F(t) = lambda(t) sin(nu t + phi(t))`` splits each
coupling term into Bessel sidebands. With ``nu = Delta - alpha_A`` the first
sideband makes ``|11> <-> |20>`` resonant with strength
``g' = 2 sqrt(2) g J1(lambda)``, which is driven along the same Z loop as the
single-qubit Phase gate. The full rotating-frame model keeps every sideband.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .geompath import (
    DEFAULT_SAMPLES,
    build_z_rotation_path,
    synthesize_pulse,
)
from .qcore import (
    CollapseChannel,
    QuantumChannel,
    TimeGrid,
    Trajectory,
    evolve_channel_basis,
    propagate_lindblad,
    propagate_schrodinger,
)
from .units import two_pi_mhz

DEFAULT_DT = 0.005
DEFAULT_ETA = 0.2
DEFAULT_FIDELITY_SAMPLES = 10001
BESSEL_MAX_ARG = 20.0
LAMBDA_MAX = 1.8411837813406593  # first maximum of J1
J1_MAX = 0.5818652242815964
SQRT2 = math.sqrt(2.0)
COMPUTATIONAL = (0, 1, 3, 4)  # |00>, |01>, |10>, |11> in the 3x3 product basis
LAYOUTS = ("grid+corner", "uniform-endpoints")


def level(a: int, b: int) -> int:
    """Index of ``|ab>`` in the two-qutrit product basis."""
    return 3 * a + b


# -- Bessel J1 ----------------------------------------------------------------

def _j1_series(x):
    half = 0.5 * x
    q = -half * half
    term = half.copy()
    total = term.copy()
    for k in range(1, 40):
        term = term * q / (k * (k + 1))
        total = total + term
    return total


def _j1_miller(x):
    # backward recurrence J_{n-1} = (2n/x) J_n - J_{n+1}, normalised with
    # J_0 + 2 sum J_{2k} = 1
    start = 2 * (int(np.max(x)) + 30)
    jp = np.zeros_like(x)
    jn = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    for n in range(start, 0, -1):
        jm = (2.0 * n / x) * jn - jp
        jp, jn = jn, jm
        if (n - 1) == 1:
            j1 = jn.copy()
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm = norm + 2.0 * jn
        big = np.abs(jn) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            jp, jn, norm, j1 = jp * scale, jn * scale, norm * scale, j1 * scale
    norm = norm + jn  # jn now holds J_0
    return j1 / norm


def bessel_j1(x):
    """Bessel function of the first kind of order one, for ``|x| <= 20``.

    Power series for ``|x| <= 4``, Miller's backward recurrence beyond.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > BESSEL_MAX_ARG):
        raise InputError(f"bessel_j1 argument outside [-{BESSEL_MAX_ARG:g}, {BESSEL_MAX_ARG:g}]")
    a = np.atleast_1d(np.abs(arr))
    out = np.empty_like(a)
    small = a <= 4.0
    if np.any(small):
        out[small] = _j1_series(a[small])
    if np.any(~small):
        out[~small] = _j1_miller(a[~small])
    out = out * np.sign(np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def invert_j1(y):
    """``lambda`` on the first monotone branch with ``J1(lambda) = y``.

    Bisection on ``[0, LAMBDA_MAX]``; accepts scalars or arrays.
    """
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > J1_MAX + 1e-12):
        raise InputError("effective coupling exceeds J₁ branch maximum (need 0 <= y <= %.10f)" % J1_MAX)
    t = np.atleast_1d(np.minimum(arr, J1_MAX))
    lo = np.zeros_like(t)
    hi = np.full_like(t, LAMBDA_MAX)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = bessel_j1(mid) < t
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    lam = 0.5 * (lo + hi)
    lam[t == 0] = 0.0
    return float(lam[0]) if arr.ndim == 0 else lam.reshape(arr.shape)


# -- device and drive ---------------------------------------------------------

@dataclass(frozen=True)
class TwoTransmonParams:
    """Two-transmon constants in rad/ns.

    ``nu`` must equal ``delta - alpha_a`` unless ``allow_detuned`` is set.
    ``warnings`` lists rotating-wave concerns instead of raising.
    """

    delta: float
    alpha_a: float
    alpha_b: float
    g: float
    nu: float
    gamma1: float = 0.0
    gamma2: float = 0.0
    allow_detuned: bool = False
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("delta", "alpha_a", "alpha_b", "g", "nu", "gamma1", "gamma2"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")
        if self.g < 0:
            raise InputError("g must be >= 0")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise InputError("decay and dephasing rates must be >= 0")
        resonant = self.delta - self.alpha_a
        if not self.allow_detuned and abs(self.nu - resonant) > 1e-9 * max(1.0, abs(resonant)):
            raise InputError(
                f"nu = {self.nu:.9g} rad/ns is not delta - alpha_a = {resonant:.9g}; "
                "set allow_detuned to override"
            )
        gaps = min(self.nu, self.delta - self.nu, self.delta + self.alpha_b - self.nu)
        notes = []
        if self.g > gaps / 10:
            notes.append(
                f"rotating-wave condition weak: g = {self.g:.4g} exceeds "
                f"min(nu, delta-nu, delta+alpha_b-nu)/10 = {gaps / 10:.4g} rad/ns"
            )
        object.__setattr__(self, "warnings", tuple(notes))

    @classmethod
    def reference(cls, gamma: float | None = None) -> "TwoTransmonParams":
        """Delta = 2pi x 500 MHz, alpha_A = 2pi x 320, alpha_B = 2pi x 300, g = 2pi x 5, nu = 2pi x 180 MHz."""
        rate = two_pi_mhz(2e-3) if gamma is None else gamma
        return cls(delta=two_pi_mhz(500.0), alpha_a=two_pi_mhz(320.0), alpha_b=two_pi_mhz(300.0),
                   g=two_pi_mhz(5.0), nu=two_pi_mhz(180.0), gamma1=rate, gamma2=rate)


@dataclass(frozen=True)
class ModulationDrive:
    """Sampled modulation ``F(t) = lambda(t) sin(nu t + phi2(t))``.

    ``g_eff`` holds the target effective coupling ``2 sqrt(2) g J1(lambda)``.
    """

    times: np.ndarray
    lam: np.ndarray
    phi2: np.ndarray
    nu: float
    g_eff: np.ndarray

    def __post_init__(self):
        for name in ("times", "lam", "phi2", "g_eff"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != np.shape(self.times) or a.ndim != 1:
                raise InputError(f"{name} must be a 1-d array matching times")
            if not np.all(np.isfinite(a)):
                raise InputError(f"{name} has non-finite samples")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(self.lam < 0) or np.any(self.lam > LAMBDA_MAX + 1e-12):
            raise InputError(f"lambda leaves the first J1 branch [0, {LAMBDA_MAX:.4f}]")

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    def at(self, t):
        """Interpolated ``(lambda, phi2)`` at times ``t``."""
        t = np.asarray(t, dtype=float)
        slack = 1e-9 * max(1.0, self.tau)
        if np.any(t < self.times[0] - slack) or np.any(t > self.times[-1] + slack):
            raise InputError(f"time outside the drive span [0, {self.tau:.6g}] ns")
        return np.interp(t, self.times, self.lam), np.interp(t, self.times, self.phi2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_ns", "lambda", "phi2_rad", "g_eff_rad_per_ns"])
            for row in zip(self.times, self.lam, self.phi2, self.g_eff):
                w.writerow([repr(float(v)) for v in row])


def build_cphase_drive(gamma_prime: float, tau_prime: float, params: TwoTransmonParams,
                       eta: float = DEFAULT_ETA, samples: int = DEFAULT_SAMPLES):
    """Modulation realising the control-phase gate ``diag(1, 1, 1, exp(i gamma'))``.

    The Z loop is synthesized at fixed duration ``tau_prime``; its amplitude
    is the effective coupling ``g'(t)`` and its phase the modulation phase.

    Returns
    -------
    (ModulationDrive, PulseSchedule)
    """
    path = build_z_rotation_path(gamma_prime, eta)
    schedule = synthesize_pulse(path, duration=tau_prime, samples=samples)
    if params.g <= 0:
        raise InputError("g must be positive to build a modulation drive")
    y = schedule.omega / (2 * SQRT2 * params.g)
    peak = float(np.max(y))
    if peak > J1_MAX:
        need = tau_prime * peak / J1_MAX
        raise InputError(
            f"effective coupling exceeds J₁ branch maximum: peak g' = {schedule.peak:.6g} rad/ns "
            f"needs J1 = {peak:.6f} > {J1_MAX:.6f}; use tau_prime >= {need:.4g} ns"
        )
    lam = invert_j1(y)
    drive = ModulationDrive(times=schedule.times, lam=lam, phi2=schedule.phi, nu=params.nu,
                            g_eff=schedule.omega)
    return drive, schedule


# -- Hamiltonians -------------------------------------------------------------

def effective_hamiltonian(g_eff: float, phi2: float) -> np.ndarray:
    """Resonant ``{|11>, |20>}`` block ``(1/2)[[0, g' e^{i phi}], [g' e^{-i phi}, 0]]``."""
    if g_eff < 0:
        raise InputError("g_eff must be >= 0")
    e = 0.5 * g_eff * np.exp(1j * phi2)
    return np.array([[0.0, e], [np.conj(e), 0.0]], dtype=complex)


class CoupledTransmonHamiltonian:
    """Rotating-frame two-transmon Hamiltonian with all modulation sidebands."""

    def __init__(self, params: TwoTransmonParams, drive: ModulationDrive):
        self.params = params
        self.drive = drive

    def sample(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        lam, phi = self.drive.at(times)
        p = self.params
        mod = np.exp(-1j * lam * np.sin(self.drive.nu * times + phi))
        h = np.zeros((times.size, 9, 9), dtype=complex)
        h[:, level(1, 0), level(0, 1)] = p.g * np.exp(1j * p.delta * times) * mod
        h[:, level(1, 1), level(0, 2)] = SQRT2 * p.g * np.exp(1j * (p.delta + p.alpha_b) * times) * mod
        h[:, level(2, 0), level(1, 1)] = SQRT2 * p.g * np.exp(1j * (p.delta - p.alpha_a) * times) * mod
        return h + np.conj(np.swapaxes(h, 1, 2))

    def __call__(self, t):
        return self.sample(np.array([t]))[0]


def full_hamiltonian(params: TwoTransmonParams, drive: ModulationDrive, t: float) -> np.ndarray:
    return CoupledTransmonHamiltonian(params, drive)(t)


class EffectiveHamiltonian:
    """Two-level ``{|11>, |20>}`` model driven by the target ``g'`` and phase."""

    def __init__(self, drive: ModulationDrive):
        self.drive = drive

    def sample(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.drive.at(times)
        e = 0.5 * (np.interp(times, self.drive.times, self.drive.g_eff)
                   * np.exp(1j * np.interp(times, self.drive.times, self.drive.phi2)))
        h = np.zeros((times.size, 2, 2), dtype=complex)
        h[:, 0, 1] = e
        h[:, 1, 0] = np.conj(e)
        return h

    def __call__(self, t):
        return self.sample(np.array([t]))[0]


_S1 = np.diag([1.0, SQRT2], 1).astype(complex)
_S2 = np.diag([0.0, 1.0, 2.0]).astype(complex)
_I3 = np.eye(3)


def collapse_channels(params: TwoTransmonParams) -> list[CollapseChannel]:
    """Decay and dephasing on each transmon, identity on the partner."""
    return [
        CollapseChannel(np.kron(_S1, _I3), params.gamma1),
        CollapseChannel(np.kron(_I3, _S1), params.gamma1),
        CollapseChannel(np.kron(_S2, _I3), params.gamma2),
        CollapseChannel(np.kron(_I3, _S2), params.gamma2),
    ]


# -- simulation ---------------------------------------------------------------

def gate_grid(drive: ModulationDrive, dt: float = DEFAULT_DT) -> TimeGrid:
    return TimeGrid.from_dt(0.0, drive.tau, dt)


def simulate_cphase(params: TwoTransmonParams, drive: ModulationDrive, rho0,
                    dt: float = DEFAULT_DT, record_every: float | None = 0.5) -> Trajectory:
    """Master-equation run of the full model from ``rho0`` (9x9)."""
    grid = gate_grid(drive, dt)
    stride = None if record_every is None else max(1, int(round(record_every / grid.dt)))
    return propagate_lindblad(CoupledTransmonHamiltonian(params, drive), collapse_channels(params),
                              rho0, grid, stride=stride)


def cphase_propagator(params: TwoTransmonParams, drive: ModulationDrive, dt: float = DEFAULT_DT) -> np.ndarray:
    """Closed-system 9x9 propagator of the full model."""
    return propagate_schrodinger(CoupledTransmonHamiltonian(params, drive), gate_grid(drive, dt))


def simulate_effective(drive: ModulationDrive, dt: float = DEFAULT_DT) -> np.ndarray:
    """2x2 propagator of the effective model on ``{|11>, |20>}``."""
    return propagate_schrodinger(EffectiveHamiltonian(drive), gate_grid(drive, dt))


def cphase_channel(params: TwoTransmonParams, drive: ModulationDrive, dt: float = DEFAULT_DT) -> QuantumChannel:
    """Channel on inputs in the computational subspace of the two qutrits."""
    return evolve_channel_basis(CoupledTransmonHamiltonian(params, drive), collapse_channels(params),
                                gate_grid(drive, dt), 9, support=COMPUTATIONAL)


def cphase_target(gamma_prime: float) -> np.ndarray:
    """``diag(1, 1, 1, exp(i gamma'))`` on ``|00>, |01>, |10>, |11>``."""
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * gamma_prime)]).astype(complex)


def computational_block(u) -> np.ndarray:
    u = np.asarray(u)
    return u[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]


def cphase_diagnostics(u) -> dict:
    """Phases and magnitudes of the computational block of a 9x9 propagator.

    Phases are relative to ``<00|U|00>``; ``leak_20`` is the ``|11> -> |20>``
    residual population.
    """
    c = computational_block(u)
    ref = c[0, 0]
    off = c - np.diag(np.diag(c))
    return {
        "phase_01": float(np.angle(c[1, 1] / ref)),
        "phase_10": float(np.angle(c[2, 2] / ref)),
        "phase_11": float(np.angle(c[3, 3] / ref)),
        "abs_11": float(abs(c[3, 3])),
        "max_offdiag": float(np.max(np.abs(off))),
        "leak_20": float(abs(u[level(2, 0), level(1, 1)]) ** 2),
    }


def fidelity_angles(samples: int = DEFAULT_FIDELITY_SAMPLES, layout: str = "grid+corner") -> np.ndarray:
    """``(theta1, theta2)`` pairs for the two-qubit fidelity average.

    ``"grid+corner"``: an ``m x m`` periodic grid (``m = isqrt(samples)``) plus
    ``samples - m^2`` points from the R2 low-discrepancy sequence, the first of
    which is the corner ``(0, 0)``; 10001 gives 100 x 100 + 1.
    ``"uniform-endpoints"``: ``n x n`` with ``n = ceil(sqrt(samples))`` and both
    endpoints of ``[0, 2pi]`` included; 10001 gives 101 x 101.
    """
    if int(samples) != samples or samples < 4:
        raise InputError(f"samples must be an integer >= 4, got {samples}")
    samples = int(samples)
    if layout == "grid+corner":
        m = math.isqrt(samples)
        ax = 2 * np.pi * np.arange(m) / m
        a, b = np.meshgrid(ax, ax, indexing="ij")
        pts = [np.stack([a.ravel(), b.ravel()], axis=1)]
        extra = samples - m * m
        if extra:
            plastic = 1.324717957244746
            n = np.arange(extra)[:, None]
            pts.append(2 * np.pi * np.mod(n * np.array([1 / plastic, 1 / plastic**2]), 1.0))
        return np.concatenate(pts)
    if layout == "uniform-endpoints":
        n = math.isqrt(samples - 1) + 1
        ax = np.linspace(0.0, 2 * np.pi, n)
        a, b = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)
    raise InputError(f"unknown layout {layout!r}; expected one of {LAYOUTS}")


def product_inputs(angles) -> np.ndarray:
    """9-dim vectors ``(cos t1|0> + sin t1|1>) (x) (cos t2|0> + sin t2|1>)``."""
    t1, t2 = np.asarray(angles).T
    psi = np.zeros((t1.size, 9), dtype=complex)
    psi[:, level(0, 0)] = np.cos(t1) * np.cos(t2)
    psi[:, level(0, 1)] = np.cos(t1) * np.sin(t2)
    psi[:, level(1, 0)] = np.sin(t1) * np.cos(t2)
    psi[:, level(1, 1)] = np.sin(t1) * np.sin(t2)
    return psi


def gate_fidelity_2q(channel: QuantumChannel, gamma_prime: float,
                     samples: int = DEFAULT_FIDELITY_SAMPLES, layout: str = "grid+corner") -> float:
    """Mean state fidelity over product inputs against the control-phase target."""
    if channel.dim != 9:
        raise InputError(f"expected a two-qutrit channel (dim 9), got dim {channel.dim}")
    ins = product_inputs(fidelity_angles(samples, layout))
    outs = ins.copy()
    outs[:, level(1, 1)] *= np.exp(1j * gamma_prime)
    return float(np.mean(channel.pure_state_fidelities(ins, outs)))


def unitary_channel(u, support=COMPUTATIONAL) -> QuantumChannel:
    """Channel ``rho -> U rho U^+`` in the same representation as simulated ones."""
    from .qcore import hermitian_basis

    u = np.asarray(u, dtype=complex)
    basis = hermitian_basis(u.shape[0], support)
    return QuantumChannel(dim=u.shape[0], support=tuple(sorted(support)), basis=basis,
                          outputs=u @ basis @ u.conj().T)


def warn_rwa(params: TwoTransmonParams) -> None:
    for note in params.warnings:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
