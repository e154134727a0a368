"""Cyclic evolution paths and the drive pulses that realise them.

A qubit state is parameterised by two angles and a phase,

    |psi> = exp(-i f/2) [cos(chi/2) exp(-i beta/2) |0> + sin(chi/2) exp(i beta/2) |1>],

and a resonant drive ``H = (Omega/2)(exp(i phi)|0><1| + h.c.)`` keeps the state
on a prescribed ``(chi, beta, f)`` path provided

    df/dt = -(dbeta/dt) / cos(chi)
    dchi/dt = -Omega sin(beta + phi)
    dbeta/dt = -Omega cot(chi) cos(beta + phi).

Paths here fix ``chi(s)`` on a dimensionless clock ``s in [0, 1]`` and
``f = f(chi)``; ``beta`` then follows from ``dbeta = -f'(chi) cos(chi) dchi``
up to declared jumps at segment boundaries. Eliminating ``beta + phi`` gives
the closed form used for synthesis,

    Omega exp(i (beta + phi)) = (df/dt) sin(chi) - i dchi/dt,

which is regular at the poles ``chi in {0, pi}``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .errors import InputError, NumericalError
from .qcore import TimeGrid, propagate_schrodinger

DEFAULT_SAMPLES = 20000
DEFAULT_DT = 0.01
PATH_FAMILIES = ("x-rotation", "z-rotation", "general")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class PathSegment:
    """One smooth piece of a path on ``s in [s_start, s_end]``.

    ``direction`` is the sign of ``dchi/ds`` inside the segment. It fixes the
    drive phase where ``dchi/ds`` vanishes (segment ends, or a segment parked
    at a pole).
    """

    s_start: float
    s_end: float
    chi_fn: Callable
    chi_rate_fn: Callable
    f_fn: Callable
    f_slope_fn: Callable
    direction: int
    beta_jump_at_start: float = 0.0


@dataclass(frozen=True)
class EvolutionPath:
    segments: tuple
    chi0: float
    beta0: float
    gamma: float
    family: str = "general"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise InputError("a path needs at least one segment")
        if abs(segs[0].s_start) > 1e-12 or abs(segs[-1].s_end - 1.0) > 1e-12:
            raise InputError("segments must cover s in [0, 1]")
        for a, b in zip(segs, segs[1:]):
            if abs(a.s_end - b.s_start) > 1e-12:
                raise InputError("segments must be contiguous and ordered")
            if abs(float(a.chi_fn(a.s_end)) - float(b.chi_fn(b.s_start))) > 1e-9:
                raise InputError(f"chi is discontinuous at s = {b.s_start}")
        for seg in segs:
            if not seg.s_end > seg.s_start:
                raise InputError("segments must have positive length")
            if seg.direction not in (-1, 1):
                raise InputError("segment direction must be +1 or -1")
        if abs(float(segs[0].chi_fn(0.0)) - self.chi0) > 1e-9:
            raise InputError("chi(0) does not match chi0")
        if abs(float(segs[-1].chi_fn(1.0)) - self.chi0) > 1e-9:
            raise InputError("path is not cyclic: chi(1) != chi(0)")

    def descriptor(self) -> dict:
        d = {"family": self.family, "gamma": self.gamma, "chi0": self.chi0, "beta0": self.beta0}
        d.update(self.params)
        return d

    @property
    def boundaries(self) -> np.ndarray:
        return np.array([s.s_start for s in self.segments] + [1.0])

    def segment_index(self, s) -> np.ndarray:
        """Owning segment for each ``s``; a shared boundary belongs to the left piece."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        inner = self.boundaries[1:-1]
        return np.searchsorted(inner, s, side="left")

    def beta_starts(self) -> list:
        """``beta`` just after the jump at the start of every segment."""
        out = []
        beta = self.beta0
        for j, seg in enumerate(self.segments):
            if j > 0:
                prev = self.segments[j - 1]
                beta = beta - _beta_increment(prev, prev.s_start, np.array([prev.s_end]))[0]
            beta = beta + seg.beta_jump_at_start
            out.append(beta)
        return out

    def sample_segment(self, j: int, s) -> "PathSample":
        """Evaluate segment ``j`` at ``s`` (which may include its endpoints)."""
        seg = self.segments[j]
        s = np.asarray(s, dtype=float)
        chi = np.asarray(seg.chi_fn(s), dtype=float) * np.ones_like(s)
        rate = np.asarray(seg.chi_rate_fn(s), dtype=float) * np.ones_like(s)
        slope = np.asarray(seg.f_slope_fn(chi), dtype=float) * np.ones_like(s)
        beta = self.beta_starts()[j] - _beta_increment(seg, seg.s_start, s)
        f = np.asarray(seg.f_fn(chi), dtype=float) * np.ones_like(s) + self.f_offsets()[j]
        return PathSample(s=s, chi=chi, chi_rate=rate, f_slope=slope, beta=beta, f=f)

    def sample(self, s) -> "PathSample":
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = self.segment_index(s)
        parts = {k: np.empty_like(s) for k in ("chi", "chi_rate", "f_slope", "beta", "f")}
        for j in range(len(self.segments)):
            m = idx == j
            if np.any(m):
                ps = self.sample_segment(j, s[m])
                for k in parts:
                    parts[k][m] = getattr(ps, k)
        return PathSample(s=s, **parts)

    def f_offsets(self) -> list:
        """Constant added to ``f_fn`` on each segment so the state stays continuous.

        A jump ``dbeta`` at angle ``chi`` must come with ``df = -dbeta/cos(chi)``.
        """
        offsets = [0.0]
        for prev, seg in zip(self.segments, self.segments[1:]):
            chi_b = float(seg.chi_fn(seg.s_start))
            jump = seg.beta_jump_at_start
            if jump != 0.0 and abs(math.cos(chi_b)) < 1e-12:
                raise NumericalError(f"beta jump at s = {seg.s_start} sits on the equator (cos chi = 0)")
            df = -jump / math.cos(chi_b) if jump else 0.0
            f_left = float(prev.f_fn(chi_b)) + offsets[-1]
            offsets.append(f_left + df - float(seg.f_fn(chi_b)))
        return offsets

    def initial_state(self) -> np.ndarray:
        return qubit_state(self.chi0, self.beta0)


class PathSample(NamedTuple):
    s: np.ndarray
    chi: np.ndarray
    chi_rate: np.ndarray
    f_slope: np.ndarray
    beta: np.ndarray
    f: np.ndarray


def _beta_increment(seg: PathSegment, s0: float, s) -> np.ndarray:
    """``int_{chi(s0)}^{chi(s)} f'(c) cos(c) dc`` by Gauss-Legendre in chi."""
    a = float(seg.chi_fn(s0))
    b = np.atleast_1d(np.asarray(seg.chi_fn(np.asarray(s, dtype=float)), dtype=float))
    half = 0.5 * (b - a)
    nodes = a + half[:, None] * (_GL_NODES[None, :] + 1.0)
    vals = np.asarray(seg.f_slope_fn(nodes), dtype=float) * np.cos(nodes)
    return half * (vals @ _GL_WEIGHTS)


def qubit_state(chi: float, beta: float) -> np.ndarray:
    return np.array([math.cos(chi / 2) * np.exp(-0.5j * beta), math.sin(chi / 2) * np.exp(0.5j * beta)])


# -- path builders ----------------------------------------------------------

def _x_family_f(chi):
    return np.cos(2 * chi) / 5.0


def _x_family_slope(chi):
    return -0.4 * np.sin(2 * chi)


def _four_segment_path(chi0, beta0, gamma, family, params) -> EvolutionPath:
    up = math.pi - chi0
    down = chi0

    def chi_up(s):
        return chi0 + up * np.sin(2 * np.pi * s) ** 2

    def rate_up(s):
        return up * 2 * np.pi * np.sin(4 * np.pi * s)

    def chi_down(s):
        return chi0 - down * np.sin(2 * np.pi * s) ** 2

    def rate_down(s):
        return -down * 2 * np.pi * np.sin(4 * np.pi * s)

    f, slope = _x_family_f, _x_family_slope
    segs = (
        PathSegment(0.0, 0.25, chi_up, rate_up, f, slope, +1),
        PathSegment(0.25, 0.5, chi_up, rate_up, f, slope, -1, -gamma),
        PathSegment(0.5, 0.75, chi_down, rate_down, f, slope, -1),
        PathSegment(0.75, 1.0, chi_down, rate_down, f, slope, +1, +gamma),
    )
    return EvolutionPath(segs, chi0, beta0, gamma, family, params)


def _check_gamma(gamma):
    if not (-math.pi < gamma <= math.pi):
        raise InputError(f"gamma must lie in (-pi, pi], got {gamma}")


def build_x_rotation_path(gamma: float) -> EvolutionPath:
    """Four equal segments starting on the equator; realises ``exp(i gamma sigma_x)``.

    chi rises to the south pole and back (beta jumps by -gamma there), then
    falls to the north pole and back (jump +gamma), with ``f = cos(2 chi)/5``.
    """
    _check_gamma(gamma)
    return _four_segment_path(math.pi / 2, 0.0, float(gamma), "x-rotation", {})


def build_general_path(chi0: float, beta0: float, gamma: float) -> EvolutionPath:
    """Same four-piece loop as the X family but about an arbitrary axis.

    Realises ``exp(i gamma n.sigma)`` with ``n`` set by ``(chi0, beta0)``.
    """
    _check_gamma(gamma)
    if not (0.0 <= chi0 <= math.pi):
        raise InputError(f"chi0 must lie in [0, pi], got {chi0}")
    return _four_segment_path(float(chi0), float(beta0), float(gamma), "general", {})


def build_z_rotation_path(gamma: float, eta: float = 0.2) -> EvolutionPath:
    """Two equal segments from the north pole to the south pole and back.

    ``chi = pi sin^2(pi s)``, ``f = eta (2 chi - sin 2 chi)``, single beta jump
    of ``-gamma`` at the south pole. ``eta = 0`` is the conventional
    constant-phase scheme; integer ``eta`` cancels the second-order response
    to amplitude errors.
    """
    _check_gamma(gamma)
    if not eta >= 0:
        raise InputError(f"eta must be >= 0, got {eta}")
    eta = float(eta)

    def chi(s):
        return np.pi * np.sin(np.pi * s) ** 2

    def rate(s):
        return np.pi**2 * np.sin(2 * np.pi * s)

    def f(c):
        return eta * (2 * c - np.sin(2 * c))

    def slope(c):
        return 4 * eta * np.sin(c) ** 2

    segs = (
        PathSegment(0.0, 0.5, chi, rate, f, slope, +1),
        PathSegment(0.5, 1.0, chi, rate, f, slope, -1, -float(gamma)),
    )
    return EvolutionPath(segs, 0.0, 0.0, float(gamma), "z-rotation", {"eta": eta})


def path_from_descriptor(desc: dict) -> EvolutionPath:
    fam = desc.get("family")
    if fam == "x-rotation":
        return build_x_rotation_path(desc["gamma"])
    if fam == "z-rotation":
        return build_z_rotation_path(desc["gamma"], desc.get("eta", 0.2))
    if fam == "general":
        return build_general_path(desc["chi0"], desc["beta0"], desc["gamma"])
    raise InputError(f"unknown path family {fam!r}")


# -- pulse synthesis --------------------------------------------------------

@dataclass(frozen=True)
class PulseSchedule:
    """Drive amplitude and phase sampled on a uniform grid.

    ``omega`` in rad/ns, ``phi`` in rad (unwrapped within each segment),
    ``times`` in ns from 0 to ``tau``. ``epsilon`` records an applied
    systematic amplitude error; a nonzero value waives the peak bound.
    """

    times: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    tau: float
    omega_max: float
    path: dict = field(default_factory=dict)
    epsilon: float = 0.0

    def __post_init__(self):
        arrays = {}
        for name in ("times", "omega", "phi"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim != 1:
                raise InputError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(a)):
                raise InputError(f"{name} has non-finite samples")
            a.setflags(write=False)
            arrays[name] = a
        n = arrays["times"].size
        if n < 2 or arrays["omega"].size != n or arrays["phi"].size != n:
            raise InputError("times, omega and phi must have the same length (>= 2)")
        spacing = np.diff(arrays["times"])
        if np.any(spacing <= 0) or np.ptp(spacing) > 1e-9 * max(1.0, self.tau):
            raise InputError("times must be a uniform increasing grid")
        if self.epsilon == 0.0 and np.max(np.abs(arrays["omega"])) > self.omega_max + 1e-9:
            raise InputError("drive amplitude exceeds omega_max")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def envelope(self) -> np.ndarray:
        """Complex envelope ``Omega exp(i phi)``."""
        return self.omega * np.exp(1j * self.phi)

    def envelope_at(self, t) -> np.ndarray:
        """Linear interpolation of the complex envelope at times ``t``."""
        t = np.asarray(t, dtype=float)
        env = self.envelope
        return np.interp(t, self.times, env.real) + 1j * np.interp(t, self.times, env.imag)

    def envelope_derivative(self) -> np.ndarray:
        return np.gradient(self.envelope, self.times, edge_order=2)

    def check_time(self, t) -> None:
        t = np.asarray(t, dtype=float)
        slack = 1e-9 * max(1.0, self.tau)
        if np.any(t < self.times[0] - slack) or np.any(t > self.times[-1] + slack):
            raise InputError(f"time outside the schedule span [0, {self.tau:.6g}] ns")

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.omega)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_ns", "omega_rad_per_ns", "phi_rad"])
            for t, o, p in zip(self.times, self.omega, self.phi):
                w.writerow([repr(float(t)), repr(float(o)), repr(float(p))])

    def envelope_json(self) -> dict:
        return {
            "tau_ns": self.tau,
            "omega_max_rad_per_ns": self.omega_max,
            "samples": int(self.times.size),
            "epsilon": self.epsilon,
            "path": dict(self.path),
        }

    def write(self, csv_path, json_path=None) -> None:
        self.to_csv(csv_path)
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.envelope_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, csv_path, json_path) -> "PulseSchedule":
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(Path(json_path).read_text())
        return cls(
            times=data[:, 0], omega=data[:, 1], phi=data[:, 2],
            tau=meta["tau_ns"], omega_max=meta["omega_max_rad_per_ns"],
            path=meta.get("path", {}), epsilon=meta.get("epsilon", 0.0),
        )


def synthesize_pulse(path: EvolutionPath, omega_max: float | None = None,
                     samples: int = DEFAULT_SAMPLES, duration: float | None = None) -> PulseSchedule:
    """Inverse-engineer ``(Omega, phi)`` for ``path``.

    The grid has ``samples`` intervals (``samples + 1`` points) on
    ``s in [0, 1]``. Exactly one of ``omega_max`` (time is rescaled so the
    peak amplitude equals it) and ``duration`` (fixed ``tau`` in ns, peak is
    an output) must be given.
    """
    if (omega_max is None) == (duration is None):
        raise InputError("give exactly one of omega_max or duration")
    if omega_max is not None and not omega_max > 0:
        raise InputError(f"omega_max must be positive, got {omega_max}")
    if duration is not None and not duration > 0:
        raise InputError(f"duration must be positive, got {duration}")
    if int(samples) != samples or samples < 1000:
        raise InputError(f"samples must be an integer >= 1000, got {samples}")

    s = np.linspace(0.0, 1.0, int(samples) + 1)
    idx = path.segment_index(s)
    amp = np.empty_like(s)
    phase = np.empty_like(s)
    for j, seg in enumerate(path.segments):
        m = idx == j
        if not np.any(m):
            continue
        ps = path.sample_segment(j, s[m])
        rate_sign = np.sign(ps.chi_rate) * (np.abs(ps.chi_rate) > 1e-9)
        if np.any((rate_sign != 0) & (rate_sign != seg.direction)):
            raise InputError(f"segment {j}: dchi/ds changes sign against its declared direction")
        tilt = ps.f_slope * np.sin(ps.chi)
        amp[m] = np.abs(ps.chi_rate) * np.sqrt(1.0 + tilt**2)
        # arg of Omega exp(i(beta+phi)) = arg(direction * (f' sin chi - i)); regular at the poles
        phase[m] = np.unwrap(np.angle(seg.direction * (tilt - 1j)) - ps.beta)
    bad = ~(np.isfinite(amp) & np.isfinite(phase))
    if np.any(bad):
        raise NumericalError(f"non-finite drive at s = {s[np.argmax(bad)]:.6g}")
    peak = float(np.max(amp))
    if peak == 0.0:
        # identity path (e.g. a degenerate loop); any positive duration works
        peak = 1.0
    tau = peak / omega_max if duration is None else float(duration)
    omega = amp / tau
    cap = omega_max if omega_max is not None else float(np.max(omega))
    if omega_max is not None:
        omega = np.minimum(omega, omega_max)
    return PulseSchedule(times=s * tau, omega=omega, phi=phase, tau=tau, omega_max=cap,
                         path=path.descriptor())


class DriveHamiltonian:
    """Ideal two-level drive ``(1/2)(E|0><1| + E*|1><0|)`` from a schedule.

    ``scale`` multiplies the amplitude (used for systematic-error studies).
    """

    def __init__(self, schedule: PulseSchedule, scale: float = 1.0):
        self.schedule = schedule
        self.scale = scale

    def sample(self, times):
        self.schedule.check_time(times)
        e = 0.5 * self.scale * self.schedule.envelope_at(times)
        h = np.zeros((np.size(times), 2, 2), dtype=complex)
        h[:, 0, 1] = e
        h[:, 1, 0] = np.conj(e)
        return h

    def __call__(self, t):
        return self.sample(np.array([t]))[0]


def ideal_propagator(schedule: PulseSchedule, dt: float = DEFAULT_DT, t_end: float | None = None) -> np.ndarray:
    end = schedule.tau if t_end is None else t_end
    return propagate_schrodinger(DriveHamiltonian(schedule), TimeGrid.from_dt(0.0, end, dt))


# -- residuals and phases ---------------------------------------------------

class ConstraintResiduals(NamedTuple):
    """Residual series in rad/ns; excluded points are NaN."""

    times: np.ndarray
    f_residual: np.ndarray
    chi_residual: np.ndarray
    beta_residual: np.ndarray

    def max(self) -> float:
        return float(max(np.nanmax(np.abs(r)) for r in self[1:]))


def constraint_residuals(schedule: PulseSchedule, path: EvolutionPath) -> ConstraintResiduals:
    """Finite-difference check that ``schedule`` drives the state along ``path``.

    The f-relation is tested in the pole-free form ``f' cos chi + beta' = 0``.
    Samples at and next to a pole crossing (``chi in {0, pi}``) are masked.
    """
    if schedule.path and schedule.path != path.descriptor():
        raise InputError("schedule was not synthesised from this path")
    n = schedule.times.size - 1
    s = schedule.times / schedule.tau
    if abs(s[0]) > 1e-12 or abs(s[-1] - 1.0) > 1e-12:
        raise InputError("schedule grid does not span the path clock [0, 1]")
    res = np.full((3, n + 1), np.nan)
    owner = path.segment_index(s)
    for j, seg in enumerate(path.segments):
        sel = np.nonzero((s >= seg.s_start - 1e-12) & (s <= seg.s_end + 1e-12))[0]
        if sel.size < 3:
            continue
        t = schedule.times[sel]
        ps = path.sample_segment(j, s[sel])
        chi_dot = np.gradient(ps.chi, t, edge_order=2)
        beta_dot = np.gradient(ps.beta, t, edge_order=2)
        f_dot = np.gradient(ps.f, t, edge_order=2)
        om = schedule.omega[sel]
        ph = schedule.phi[sel]
        with np.errstate(divide="ignore", invalid="ignore"):
            r_f = f_dot * np.cos(ps.chi) + beta_dot
            r_chi = chi_dot + om * np.sin(ps.beta + ph)
            r_beta = beta_dot + om * np.cos(ps.beta + ph) / np.tan(ps.chi)
        own = owner[sel] == j
        # boundary samples carry the phase of their owning segment only
        for row, r in enumerate((r_f, r_chi, r_beta)):
            res[row, sel[own]] = r[own]
    pole = np.abs(np.sin(path.sample(s).chi)) < 1e-9
    for b in path.boundaries:
        chi_b = float(path.segments[min(path.segment_index(b)[0], len(path.segments) - 1)].chi_fn(b))
        if abs(math.sin(chi_b)) < 1e-9:
            pole |= np.abs(s - b) <= 1.5 / n
    res[:, pole] = np.nan
    return ConstraintResiduals(schedule.times.copy(), res[0], res[1], res[2])


def dynamical_phase(path: EvolutionPath) -> float:
    """``(1/2) closed-integral of beta' sin^2(chi)/cos(chi)`` plus jump terms.

    The integrand has a removable singularity at ``cos chi = 0`` because
    ``beta' = -f' chi' cos chi``; it is evaluated in cancelled form there.
    Time rescaling does not change the value, so it is computed on the path
    clock.
    """
    total = 0.0
    for j, seg in enumerate(path.segments):
        def integrand(s, seg=seg):
            chi = float(seg.chi_fn(s))
            rate = float(seg.chi_rate_fn(s))
            slope = float(seg.f_slope_fn(chi))
            c = math.cos(chi)
            beta_rate = -slope * rate * c
            if abs(c) < 1e-12:
                return -slope * rate * math.sin(chi) ** 2
            return beta_rate * math.sin(chi) ** 2 / c

        val, err, *rest = integrate.quad(integrand, seg.s_start, seg.s_end, epsabs=1e-13,
                                         epsrel=1e-12, limit=200, full_output=1)
        if len(rest) > 1 or not math.isfinite(val) or err > 1e-8:
            raise NumericalError(f"dynamical-phase integral did not converge on segment {j}")
        total += 0.5 * val
        if seg.beta_jump_at_start:
            chi_b = float(seg.chi_fn(seg.s_start))
            sin2 = math.sin(chi_b) ** 2
            if sin2 > 1e-24:
                c = math.cos(chi_b)
                if abs(c) < 1e-12:
                    raise NumericalError("divergent jump term: beta jump on the equator")
                total += 0.5 * seg.beta_jump_at_start * sin2 / c
    return total


def geometric_line_integral(path: EvolutionPath) -> float:
    """Literal ``(1/2) closed-integral of beta' cos(chi)``, jumps included.

    For a path whose final beta differs from the initial one this is not the
    gauge-invariant cyclic phase; it is exposed for comparison only.
    """
    total = 0.0
    for seg in path.segments:
        def integrand(s, seg=seg):
            chi = float(seg.chi_fn(s))
            return -float(seg.f_slope_fn(chi)) * float(seg.chi_rate_fn(s)) * math.cos(chi) ** 2

        val, _ = integrate.quad(integrand, seg.s_start, seg.s_end, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += 0.5 * val
        if seg.beta_jump_at_start:
            total += 0.5 * seg.beta_jump_at_start * math.cos(float(seg.chi_fn(seg.s_start)))
    return total


def f_difference_phase(path: EvolutionPath) -> float:
    """``[f(0) - f(1)] / 2`` including the f jumps implied by beta jumps."""
    first, last = path.segments[0], path.segments[-1]
    f0 = float(first.f_fn(first.chi_fn(0.0)))
    f1 = float(last.f_fn(last.chi_fn(1.0))) + path.f_offsets()[-1]
    return 0.5 * (f0 - f1)


class PhaseDecomposition(NamedTuple):
    total: float
    dynamical: float
    geometric: float


def _wrap(x: float) -> float:
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def phase_decomposition(path: EvolutionPath, schedule: PulseSchedule, dt: float = DEFAULT_DT) -> PhaseDecomposition:
    """Split the cyclic phase into dynamical and geometric parts.

    The total phase is read off the ideal two-level propagator,
    ``U |psi(0)> = exp(i total) |psi(0)>``; the geometric part is
    ``total - dynamical`` (Aharonov-Anandan).

    Raises
    ------
    NumericalError
        ``|psi(0)>`` is not an eigenvector of ``U`` within 1e-6 (non-cyclic
        evolution), or a built-in path misses its target phase by > 1e-6.
    """
    u = ideal_propagator(schedule, dt)
    psi0 = path.initial_state()
    out = u @ psi0
    amp = np.vdot(psi0, out)
    if np.linalg.norm(out - amp * psi0) > 1e-6:
        raise NumericalError("non-cyclic evolution: initial state is not an eigenvector of U(tau)")
    total = _wrap(float(np.angle(amp)))
    gd = dynamical_phase(path)
    if path.family in PATH_FAMILIES and abs(_wrap(total - path.gamma)) > 1e-6:
        raise NumericalError(f"accumulated phase {total:.9f} misses target gamma {path.gamma:.9f}")
    return PhaseDecomposition(total=total, dynamical=gd, geometric=_wrap(total - gd))


def target_gate(chi0: float, beta0: float, gamma: float) -> np.ndarray:
    """``exp(i gamma n.sigma)`` with ``n = (sin chi0 cos beta0, sin chi0 sin beta0, cos chi0)``."""
    c, s = math.cos(gamma), math.sin(gamma)
    return np.array([
        [c + 1j * math.cos(chi0) * s, 1j * s * math.sin(chi0) * np.exp(-1j * beta0)],
        [1j * s * math.sin(chi0) * np.exp(1j * beta0), c - 1j * math.cos(chi0) * s],
    ])


def path_target(path: EvolutionPath) -> np.ndarray:
    return target_gate(path.chi0, path.beta0, path.gamma)
