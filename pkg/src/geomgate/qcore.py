"""Dense time-ordered propagation for small Hilbert spaces (dim <= 9).

Two integrators live here, both fixed-step classical Runge-Kutta (RK4):

* :func:`propagate_schrodinger` integrates ``dU/dt = -i H(t) U``.
* :func:`propagate_lindblad` integrates
  ``drho/dt = i[rho, H] + sum_k rate_k (A rho A^+ - {A^+ A, rho}/2)``.

Hamiltonians are passed as callables ``t -> ndarray``. If the callable also
exposes ``sample(times)`` returning a stacked ``(n, d, d)`` array it is used
instead of a Python loop; every model Hamiltonian in this package does so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError

HERMITIAN_TOL = 1e-10
UNITARITY_TOL = 1e-8
TRACE_DRIFT_TOL = 1e-6
MAX_DIM = 9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_start + k*dt`` for ``k = 0..steps`` (times in ns)."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise InputError("time grid bounds must be finite")
        if not self.t_end > self.t_start:
            raise InputError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InputError(f"steps must be a positive integer, got {self.steps}")

    @classmethod
    def from_dt(cls, t_start: float, t_end: float, dt: float) -> "TimeGrid":
        """Smallest grid whose spacing does not exceed ``dt``."""
        if dt <= 0:
            raise InputError(f"dt must be positive, got {dt}")
        steps = max(1, math.ceil((t_end - t_start) / dt - 1e-9))
        return cls(float(t_start), float(t_end), steps)

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.steps + 1)

    def stage_times(self) -> np.ndarray:
        """Grid points and midpoints, i.e. every time RK4 evaluates H at."""
        return np.linspace(self.t_start, self.t_end, 2 * self.steps + 1)


@dataclass(frozen=True)
class CollapseChannel:
    """Jump operator ``operator`` acting with ``rate`` (rad/ns)."""

    operator: np.ndarray
    rate: float

    def __post_init__(self):
        op = _as_square(self.operator, "collapse operator")
        if not math.isfinite(self.rate) or self.rate < 0:
            raise InputError(f"collapse rate must be finite and >= 0, got {self.rate}")
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)
        object.__setattr__(self, "rate", float(self.rate))


@dataclass(frozen=True)
class Trajectory:
    """Sampled density-matrix trajectory; ``states[i]`` is rho at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self) -> np.ndarray:
        return np.real(np.einsum("nii->ni", self.states))


def _as_square(matrix, name: str) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


def check_density(rho, name: str = "rho") -> np.ndarray:
    """Validate a density operator and return it as a complex array."""
    r = _as_square(rho, name)
    if np.max(np.abs(r - r.conj().T)) > 1e-12:
        raise InputError(f"{name} is not Hermitian")
    if abs(np.trace(r).real - 1.0) > 1e-10:
        raise InputError(f"{name} has trace {np.trace(r).real!r}, expected 1")
    if np.min(np.linalg.eigvalsh(r)) < -1e-8:
        raise InputError(f"{name} has a negative eigenvalue")
    return r


def pure_density(psi, dim: int | None = None) -> np.ndarray:
    v = embed(psi, dim)
    return np.outer(v, v.conj())


def embed(psi, dim: int | None = None) -> np.ndarray:
    """Pad a state vector with zeros up to ``dim`` (subspace embedding)."""
    v = np.asarray(psi, dtype=complex).ravel()
    if dim is None or dim == v.size:
        return v.copy()
    if dim < v.size:
        raise InputError(f"cannot embed a length-{v.size} state into dimension {dim}")
    out = np.zeros(dim, dtype=complex)
    out[: v.size] = v
    return out


def sample_hamiltonian(hamiltonian_fn, times) -> np.ndarray:
    """Evaluate ``hamiltonian_fn`` on ``times`` and validate the stack."""
    times = np.asarray(times, dtype=float)
    sampler = getattr(hamiltonian_fn, "sample", None)
    if sampler is not None:
        hs = np.asarray(sampler(times), dtype=complex)
    else:
        hs = np.stack([np.asarray(hamiltonian_fn(t), dtype=complex) for t in times])
    if hs.ndim != 3 or hs.shape[1] != hs.shape[2] or hs.shape[0] != times.size:
        raise InputError(f"Hamiltonian samples have shape {hs.shape}; expected ({times.size}, d, d)")
    if not np.all(np.isfinite(hs)):
        bad = np.argwhere(~np.all(np.isfinite(hs), axis=(1, 2)))[0, 0]
        raise InputError(f"Hamiltonian has non-finite entries at t = {times[bad]:.6g} ns")
    asym = np.max(np.abs(hs - np.conj(np.swapaxes(hs, 1, 2))), axis=(1, 2))
    if np.max(asym) > HERMITIAN_TOL:
        bad = int(np.argmax(asym))
        raise InputError(
            f"Hamiltonian is not Hermitian at t = {times[bad]:.6g} ns (asymmetry {asym[bad]:.3g})"
        )
    return hs


def propagate_schrodinger(hamiltonian_fn, grid: TimeGrid) -> np.ndarray:
    """Time-ordered propagator ``U(t_end, t_start)`` by fixed-step RK4.

    Raises
    ------
    InputError
        Non-Hermitian or non-finite Hamiltonian samples.
    NumericalError
        ``max|U^+ U - I|`` exceeds 1e-8, i.e. the step is too coarse.
    """
    hs = sample_hamiltonian(hamiltonian_fn, grid.stage_times())
    u = _rk4_unitary(hs, grid.dt)
    err = unitarity_error(u)
    if err > UNITARITY_TOL:
        raise NumericalError(f"propagator not unitary (error {err:.3g}); reduce the time step")
    return u


def _rk4_unitary(hs: np.ndarray, h: float) -> np.ndarray:
    # Centre the diagonal range on zero before stepping: RK4's norm drift grows
    # with the largest level energy, and a scalar shift only changes the global
    # phase, which is restored exactly (Simpson on the stage samples) at the end.
    diag = np.real(np.diagonal(hs, axis1=1, axis2=2))
    shift = 0.5 * (diag.max(axis=1) + diag.min(axis=1))
    phase = (h / 6.0) * np.sum(shift[:-1:2] + 4.0 * shift[1::2] + shift[2::2])
    hs = hs - shift[:, None, None] * np.eye(hs.shape[1])
    a = -1j * hs
    u = np.exp(-1j * phase) * np.eye(hs.shape[1], dtype=complex)
    half = 0.5 * h
    for k in range(0, hs.shape[0] - 1, 2):
        a0, a1, a2 = a[k], a[k + 1], a[k + 2]
        k1 = a0 @ u
        k2 = a1 @ (u + half * k1)
        k3 = a1 @ (u + half * k2)
        k4 = a2 @ (u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def _check_channels(channels, dim: int) -> list[CollapseChannel]:
    out = []
    for ch in channels:
        if not isinstance(ch, CollapseChannel):
            ch = CollapseChannel(*ch)
        if ch.operator.shape != (dim, dim):
            raise InputError(
                f"collapse operator has shape {ch.operator.shape}, Hamiltonian dimension is {dim}"
            )
        out.append(ch)
    return out


def _lindblad_rk4(hs, h, channels, r0, stride=None):
    """Batched RK4 on ``r0`` of shape (B, d, d).

    Returns the stack of sampled states with shape (n_samples, B, d, d) and
    the matching step indices. ``stride=None`` keeps only the endpoints.
    """
    steps = (hs.shape[0] - 1) // 2
    d = hs.shape[1]
    nb = r0.shape[0]
    decay = np.zeros((d, d), dtype=complex)
    jump = np.zeros((d * d, d * d), dtype=complex)
    for ch in channels:
        if ch.rate == 0.0:
            continue
        a = ch.operator
        decay += ch.rate * (a.conj().T @ a)
        # row-major vec: vec(A R A^+) = (A kron conj(A)) vec(R)
        jump += ch.rate * np.kron(a, a.conj())
    heff = hs - 0.5j * decay
    heff_dag = np.conj(np.swapaxes(heff, 1, 2))
    jump_t = jump.T.copy()
    use_jump = bool(np.any(jump))

    def rhs(k, r):
        out = -1j * (heff[k] @ r - r @ heff_dag[k])
        if use_jump:
            out += (r.reshape(nb, d * d) @ jump_t).reshape(nb, d, d)
        return out

    if stride:
        keep = list(range(0, steps + 1, stride))
        if keep[-1] != steps:
            keep.append(steps)
    else:
        keep = [0, steps]
    samples = np.empty((len(keep), nb, d, d), dtype=complex)
    samples[0] = r0
    nxt = 1
    r = r0.astype(complex, copy=True)
    half = 0.5 * h
    for n in range(steps):
        k = 2 * n
        k1 = rhs(k, r)
        k2 = rhs(k + 1, r + half * k1)
        k3 = rhs(k + 1, r + half * k2)
        k4 = rhs(k + 2, r + h * k3)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if nxt < len(keep) and keep[nxt] == n + 1:
            samples[nxt] = r
            nxt += 1
    return samples, np.asarray(keep)


def _check_trace(samples, times):
    tr = np.real(np.einsum("nbii->nb", samples))
    drift = np.abs(tr - tr[0])
    if np.max(drift) > TRACE_DRIFT_TOL:
        n = int(np.argmax(np.max(drift, axis=1)))
        raise NumericalError(
            f"trace drift {np.max(drift):.3g} at t = {times[n]:.6g} ns: step-size failure"
        )


def propagate_lindblad(hamiltonian_fn, channels, rho0, grid: TimeGrid, stride: int | None = 1) -> Trajectory:
    """Integrate the Lindblad master equation from ``rho0``.

    Parameters
    ----------
    hamiltonian_fn : callable
        ``t -> (d, d)`` Hermitian matrix in rad/ns.
    channels : iterable of CollapseChannel or (operator, rate) pairs
    rho0 : array_like
        Valid density matrix of dimension ``d``.
    grid : TimeGrid
    stride : int or None
        Keep every ``stride``-th step (endpoints always kept); ``None`` keeps
        only the initial and final state.

    Raises
    ------
    InputError
        Dimension mismatch, invalid ``rho0`` or Hamiltonian.
    NumericalError
        Trace drifts by more than 1e-6 (the step is too coarse).
    """
    r0 = check_density(rho0, "rho0")
    hs = sample_hamiltonian(hamiltonian_fn, grid.stage_times())
    if hs.shape[1] != r0.shape[0]:
        raise InputError(f"rho0 has dimension {r0.shape[0]}, Hamiltonian has {hs.shape[1]}")
    chans = _check_channels(channels, r0.shape[0])
    samples, idx = _lindblad_rk4(hs, grid.dt, chans, r0[None], stride)
    times = grid.t_start + idx * grid.dt
    _check_trace(samples, times)
    return Trajectory(times=times, states=samples[:, 0])


def state_fidelity(rho, psi) -> float:
    """``<psi|rho|psi>`` for a normalised pure target.

    ``psi`` may be shorter than ``rho``; it is then embedded in the leading
    levels (e.g. a qubit state inside a qutrit).
    """
    r = np.asarray(rho, dtype=complex)
    v = embed(psi, r.shape[0])
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-8:
        raise InputError(f"target state is not normalised (norm {norm:.12g})")
    val = np.vdot(v, r @ v)
    if abs(val.imag) > 1e-10:
        raise NumericalError(f"fidelity has imaginary part {val.imag:.3g}; rho is not Hermitian")
    return float(min(1.0, max(0.0, val.real)))


def hermitian_basis(dim: int, support=None) -> np.ndarray:
    """Orthonormal Hermitian operator basis on the span of ``support`` levels.

    With ``support=None`` the basis spans all ``dim**2`` operators. Elements
    are ``|j><j|``, ``(|j><k| + |k><j|)/sqrt 2`` and
    ``(-i|j><k| + i|k><j|)/sqrt 2``, orthonormal under ``tr(A B)``.
    """
    levels = list(range(dim)) if support is None else sorted(set(int(s) for s in support))
    if not levels or levels[0] < 0 or levels[-1] >= dim:
        raise InputError(f"support {support} is not within range({dim})")
    basis = []
    for j in levels:
        e = np.zeros((dim, dim), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    s = 1.0 / math.sqrt(2.0)
    for a, j in enumerate(levels):
        for k in levels[a + 1 :]:
            e = np.zeros((dim, dim), dtype=complex)
            e[j, k] = e[k, j] = s
            basis.append(e)
            e = np.zeros((dim, dim), dtype=complex)
            e[j, k] = -1j * s
            e[k, j] = 1j * s
            basis.append(e)
    return np.array(basis)


@dataclass(frozen=True)
class QuantumChannel:
    """Evolved operator basis; outputs for other inputs follow by linearity.

    ``outputs[b]`` is the image of ``basis[b]``. Inputs must be supported on
    the ``support`` levels the basis was built on.
    """

    dim: int
    support: tuple
    basis: np.ndarray
    outputs: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def _coefficients(self, rho):
        r = np.asarray(rho, dtype=complex)
        if r.shape != (self.dim, self.dim):
            raise InputError(f"input has shape {r.shape}, channel acts on dimension {self.dim}")
        outside = np.ones(self.dim, bool)
        outside[list(self.support)] = False
        if np.any(np.abs(r[outside]) > 1e-12) or np.any(np.abs(r[:, outside]) > 1e-12):
            raise InputError("input has weight outside the channel support")
        return np.real(np.einsum("bij,ji->b", self.basis, r))

    def apply(self, rho) -> np.ndarray:
        c = self._coefficients(rho)
        return np.einsum("b,bij->ij", c, self.outputs)

    def pure_state_fidelities(self, inputs, targets) -> np.ndarray:
        """``<t_n| E(|i_n><i_n|) |t_n>`` for stacks of input and target vectors."""
        ins = np.asarray(inputs, dtype=complex)
        tgs = np.asarray(targets, dtype=complex)
        if ins.shape[-1] < self.dim:
            ins = np.pad(ins, ((0, 0), (0, self.dim - ins.shape[-1])))
        if tgs.shape[-1] < self.dim:
            tgs = np.pad(tgs, ((0, 0), (0, self.dim - tgs.shape[-1])))
        coeff = np.real(np.einsum("ni,bij,nj->nb", ins.conj(), self.basis, ins))
        overlap = np.real(np.einsum("ni,bij,nj->nb", tgs.conj(), self.outputs, tgs))
        return np.einsum("nb,nb->n", coeff, overlap)


def evolve_channel_basis(hamiltonian_fn, channels, grid: TimeGrid, dim: int, support=None) -> QuantumChannel:
    """Evolve a Hermitian operator basis through the master equation.

    ``support`` restricts the basis to operators living on a subset of
    levels (inputs are then limited to that subspace, outputs are not).
    With no dissipation the outputs are formed as ``U B U^+`` from a single
    Schrodinger propagation; the result is the same map.
    """
    if dim > MAX_DIM:
        raise InputError(f"dimension {dim} exceeds the supported maximum {MAX_DIM}")
    basis = hermitian_basis(dim, support)
    levels = tuple(range(dim)) if support is None else tuple(sorted(set(int(s) for s in support)))
    hs = sample_hamiltonian(hamiltonian_fn, grid.stage_times())
    if hs.shape[1] != dim:
        raise InputError(f"Hamiltonian dimension {hs.shape[1]} does not match dim={dim}")
    chans = _check_channels(channels, dim)
    if all(ch.rate == 0.0 for ch in chans):
        u = _rk4_unitary(hs, grid.dt)
        err = unitarity_error(u)
        if err > UNITARITY_TOL:
            raise NumericalError(f"propagator not unitary (error {err:.3g}); reduce the time step")
        outputs = u @ basis @ u.conj().T
    else:
        samples, idx = _lindblad_rk4(hs, grid.dt, chans, basis, None)
        _check_trace(samples, grid.t_start + idx * grid.dt)
        outputs = samples[-1]
    return QuantumChannel(
        dim=dim, support=levels, basis=basis, outputs=outputs,
        meta={"dt": grid.dt, "steps": grid.steps},
    )


def average_gate_fidelity(u, target) -> float:
    """Average gate fidelity ``(|tr(V^+ U)|^2 + d) / (d (d + 1))`` of two unitaries."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(target, dtype=complex)
    d = u.shape[0]
    return float((abs(np.trace(v.conj().T @ u)) ** 2 + d) / (d * (d + 1)))
