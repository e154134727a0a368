"""Scenario files, validation and end-to-end runs.

A scenario is a TOML document. Every section holding a frequency or rate
carries a ``units`` tag (``"two_pi_mhz"`` or ``"rad_per_ns"``); times are in ns
and angles in rad. Example::

    kind = "single-qubit-gate"
    output = "out/phase"

    [gate]
    family = "z-rotation"
    gamma = -0.39269908169872414
    eta = 0.2

    [device]
    units = "two_pi_mhz"
    alpha = 300.0
    gamma1 = 0.002
    gamma2 = 0.002
    omega_max = 16.0

Everything is parsed and checked before any computation starts, and no
output file is written for an invalid scenario.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import octrobust, transmon1q, twoq
from .errors import ConfigError, InputError
from .geompath import (
    DEFAULT_SAMPLES,
    PATH_FAMILIES,
    phase_decomposition,
    path_from_descriptor,
    path_target,
    qubit_state,
    synthesize_pulse,
)
from .qcore import pure_density, state_fidelity
from .units import UNIT_TAGS, to_rad_per_ns

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("single-qubit-gate", "robustness-sweep", "two-qubit-cphase", "pulse-synthesis")
INITIAL_STATES = {
    "0": np.array([1.0, 0.0]),
    "1": np.array([0.0, 1.0]),
    "+": np.array([1.0, 1.0]) / math.sqrt(2),
    "-": np.array([1.0, -1.0]) / math.sqrt(2),
    "+i": np.array([1.0, 1j]) / math.sqrt(2),
}


@dataclass(frozen=True)
class Scenario:
    """Validated scenario; device objects are fully constructed."""

    kind: str
    output: Path
    gate: dict
    device: object
    drag: transmon1q.DragConfig
    epsilon: float = 0.0
    dt: float | None = None
    samples: int = DEFAULT_SAMPLES
    theta_samples: int = transmon1q.DEFAULT_THETA_SAMPLES
    fidelity_samples: int = twoq.DEFAULT_FIDELITY_SAMPLES
    layout: str = "grid+corner"
    initial_state: str | None = None
    sweep: octrobust.SweepGrid | None = None
    decoherence: bool = True
    workers: int | None = None
    source: dict = field(default_factory=dict, compare=False)


@dataclass
class FidelityReport:
    """Outcome of a run. ``parse(emit(r)) == r``."""

    kind: str
    scenario: dict
    tau_ns: float | None = None
    peak_amplitude_rad_per_ns: float | None = None
    state_fidelity: float | None = None
    gate_fidelity: float | None = None
    phases: dict | None = None
    solver: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FidelityReport":
        return cls(**json.loads(text))


# -- parsing ------------------------------------------------------------------

def _get(table: dict, key: str, where: str, kind=float, default=..., choices=None):
    name = f"{where}.{key}" if where else key
    if key not in table:
        if default is ...:
            raise ConfigError(name, "missing required field")
        return default
    v = table[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(name, f"expected a finite number, got {v!r}")
        v = float(v)
    elif kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(name, f"expected an integer, got {v!r}")
    elif kind is bool:
        if not isinstance(v, bool):
            raise ConfigError(name, f"expected true or false, got {v!r}")
    elif kind is str:
        if not isinstance(v, str):
            raise ConfigError(name, f"expected a string, got {v!r}")
    if choices is not None and v not in choices:
        raise ConfigError(name, f"must be one of {', '.join(map(str, choices))}; got {v!r}")
    return v


def _section(doc: dict, key: str, required: bool = True) -> dict:
    if key not in doc:
        if required:
            raise ConfigError(key, "missing required section")
        return {}
    if not isinstance(doc[key], dict):
        raise ConfigError(key, "expected a table")
    return doc[key]


def _rate(table: dict, key: str, where: str, units: str, default=...):
    v = _get(table, key, where, default=default)
    if v is None:
        return None
    return float(to_rad_per_ns(v, units))


def _nonneg(value: float, name: str) -> float:
    if value < 0:
        raise ConfigError(name, f"must be >= 0, got {value}")
    return value


def _positive(value: float, name: str) -> float:
    if not value > 0:
        raise ConfigError(name, f"must be > 0, got {value}")
    return value


def _unknown(table: dict, allowed: set, where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"{where}.{extra[0]}" if where else extra[0], "unknown field")


def _float_list(value, name: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(name, "expected a nonempty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(name, f"expected numbers, got {v!r}")
        out.append(float(v))
    return out


def _axis(table: dict, key: str, where: str) -> list | None:
    """``key = [..]`` or ``key_range = [start, stop, points]``."""
    name = f"{where}.{key}"
    if key in table and f"{key}_range" in table:
        raise ConfigError(name, f"give either {key} or {key}_range, not both")
    if key in table:
        return _float_list(table[key], name)
    if f"{key}_range" in table:
        r = _float_list(table[f"{key}_range"], name + "_range")
        if len(r) != 3 or not r[2].is_integer() or r[2] < 1:
            raise ConfigError(name + "_range", "expected [start, stop, points] with integer points >= 1")
        return list(np.linspace(r[0], r[1], int(r[2])))
    return None


def parse_scenario(doc: dict, base: Path | None = None) -> Scenario:
    """Validate a parsed TOML document; raises :class:`ConfigError`."""
    _unknown(doc, {"kind", "output", "gate", "device", "drag", "error", "grid", "sweep"}, "")
    kind = _get(doc, "kind", "", str, choices=KINDS)
    out = Path(_get(doc, "output", "", str, default="geomgate-out"))
    if base is not None and not out.is_absolute():
        out = base / out

    gate_t = _section(doc, "gate", required=kind != "two-qubit-cphase")
    grid_t = _section(doc, "grid", required=False)
    _unknown(grid_t, {"dt", "samples", "theta_samples", "fidelity_samples", "layout"}, "grid")
    dt = _get(grid_t, "dt", "grid", default=None)
    if dt is not None:
        _positive(dt, "grid.dt")
    samples = _get(grid_t, "samples", "grid", int, default=DEFAULT_SAMPLES)
    if samples < 1000:
        raise ConfigError("grid.samples", "must be >= 1000")
    theta_samples = _get(grid_t, "theta_samples", "grid", int, default=transmon1q.DEFAULT_THETA_SAMPLES)
    if theta_samples < 2:
        raise ConfigError("grid.theta_samples", "must be >= 2")
    fid_samples = _get(grid_t, "fidelity_samples", "grid", int, default=twoq.DEFAULT_FIDELITY_SAMPLES)
    if fid_samples < 4:
        raise ConfigError("grid.fidelity_samples", "must be >= 4")
    layout = _get(grid_t, "layout", "grid", str, default="grid+corner", choices=twoq.LAYOUTS)

    drag_t = _section(doc, "drag", required=False)
    _unknown(drag_t, {"mode", "leak_coupling"}, "drag")
    drag = transmon1q.DragConfig(
        mode=_get(drag_t, "mode", "drag", str, default="derivative", choices=("off", "derivative")),
        leak_coupling=_get(drag_t, "leak_coupling", "drag", str, default="ladder", choices=("ladder", "literal")),
    )

    err_t = _section(doc, "error", required=False)
    _unknown(err_t, {"epsilon"}, "error")
    epsilon = _get(err_t, "epsilon", "error", default=0.0)
    if abs(epsilon) > octrobust.MAX_EPSILON:
        raise ConfigError("error.epsilon", f"|epsilon| must be <= {octrobust.MAX_EPSILON}")

    dev_t = _section(doc, "device", required=kind != "pulse-synthesis")
    units = _get(dev_t, "units", "device", str, default="two_pi_mhz" if not dev_t else ..., choices=UNIT_TAGS)

    if kind == "two-qubit-cphase":
        _unknown(gate_t, {"gamma", "tau_prime", "eta"}, "gate")
        gate = {
            "family": "z-rotation",
            "gamma": _get(gate_t, "gamma", "gate", default=math.pi / 2),
            "tau_prime": _positive(_get(gate_t, "tau_prime", "gate", default=250.0), "gate.tau_prime"),
            "eta": _nonneg(_get(gate_t, "eta", "gate", default=twoq.DEFAULT_ETA), "gate.eta"),
        }
        _unknown(dev_t, {"units", "delta", "alpha_a", "alpha_b", "g", "nu", "gamma1", "gamma2", "allow_detuned"}, "device")
        vals = {k: _rate(dev_t, k, "device", units) for k in ("delta", "alpha_a", "alpha_b", "g")}
        nu = _rate(dev_t, "nu", "device", units, default=None)
        vals["nu"] = vals["delta"] - vals["alpha_a"] if nu is None else nu
        for k in ("gamma1", "gamma2"):
            vals[k] = _nonneg(_rate(dev_t, k, "device", units, default=0.0), f"device.{k}")
        _positive(vals["g"], "device.g")
        try:
            device = twoq.TwoTransmonParams(
                **vals, allow_detuned=_get(dev_t, "allow_detuned", "device", bool, default=False))
        except InputError as exc:
            raise ConfigError("device.nu", str(exc)) from None
        dt = twoq.DEFAULT_DT if dt is None else dt
    else:
        _unknown(gate_t, {"family", "gamma", "eta", "chi0", "beta0", "initial_state"}, "gate")
        family = _get(gate_t, "family", "gate", str, choices=PATH_FAMILIES)
        gamma = _get(gate_t, "gamma", "gate")
        if not -math.pi < gamma <= math.pi:
            raise ConfigError("gate.gamma", "must lie in (-pi, pi]")
        gate = {"family": family, "gamma": gamma}
        if family == "z-rotation":
            gate["eta"] = _nonneg(_get(gate_t, "eta", "gate", default=0.2), "gate.eta")
        if family == "general":
            gate["chi0"] = _get(gate_t, "chi0", "gate")
            gate["beta0"] = _get(gate_t, "beta0", "gate", default=0.0)
            if not 0 <= gate["chi0"] <= math.pi:
                raise ConfigError("gate.chi0", "must lie in [0, pi]")
        init = _get(gate_t, "initial_state", "gate", str, default=None, choices=tuple(INITIAL_STATES))
        if dev_t:
            _unknown(dev_t, {"units", "alpha", "gamma1", "gamma2", "omega_max"}, "device")
        if kind == "pulse-synthesis":
            om = _rate(dev_t, "omega_max", "device", units, default=to_rad_per_ns(16.0, "two_pi_mhz"))
            device = {"omega_max": _positive(om, "device.omega_max")}
        else:
            alpha = _positive(_rate(dev_t, "alpha", "device", units), "device.alpha")
            g1 = _nonneg(_rate(dev_t, "gamma1", "device", units), "device.gamma1")
            g2 = _nonneg(_rate(dev_t, "gamma2", "device", units), "device.gamma2")
            om = _positive(_rate(dev_t, "omega_max", "device", units), "device.omega_max")
            device = transmon1q.TransmonParams(alpha=alpha, gamma1=g1, gamma2=g2, omega_max=om)
        dt = transmon1q.DEFAULT_DT if dt is None else dt
        initial = init

    sweep = None
    decoherence = True
    workers = None
    sweep_t = _section(doc, "sweep", required=kind == "robustness-sweep")
    if kind == "robustness-sweep":
        _unknown(sweep_t, {"units", "epsilon", "epsilon_range", "gamma", "gamma_range", "decoherence", "workers"}, "sweep")
        s_units = _get(sweep_t, "units", "sweep", str, default=units, choices=UNIT_TAGS)
        eps = _axis(sweep_t, "epsilon", "sweep")
        rates = _axis(sweep_t, "gamma", "sweep")
        default = octrobust.SweepGrid.default(omega_max=device.omega_max)
        eps = list(default.epsilon_values) if eps is None else eps
        rates = list(default.gamma_values) if rates is None else [float(to_rad_per_ns(r, s_units)) for r in rates]
        if any(abs(e) > octrobust.MAX_EPSILON for e in eps):
            raise ConfigError("sweep.epsilon", f"|epsilon| must be <= {octrobust.MAX_EPSILON}")
        if any(r < 0 for r in rates):
            raise ConfigError("sweep.gamma", "rates must be >= 0")
        try:
            sweep = octrobust.SweepGrid(tuple(eps), tuple(rates))
        except InputError as exc:
            raise ConfigError("sweep", str(exc)) from None
        decoherence = _get(sweep_t, "decoherence", "sweep", bool, default=True)
        workers = _get(sweep_t, "workers", "sweep", int, default=None)
        if workers is not None and workers < 1:
            raise ConfigError("sweep.workers", "must be >= 1")
    elif sweep_t:
        raise ConfigError("sweep", f"not used by kind {kind!r}")

    if kind == "two-qubit-cphase":
        initial = None
    return Scenario(
        kind=kind, output=out, gate=gate, device=device, drag=drag, epsilon=epsilon, dt=dt,
        samples=samples, theta_samples=theta_samples, fidelity_samples=fid_samples, layout=layout,
        initial_state=initial, sweep=sweep, decoherence=decoherence, workers=workers, source=doc,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"not valid TOML: {exc}") from None
    return parse_scenario(doc, base=path.parent)


# -- running ------------------------------------------------------------------

def _default_initial(family: str) -> str:
    return "0" if family == "x-rotation" else "+"


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def _echo(sc: Scenario) -> dict:
    return json.loads(json.dumps(sc.source, default=str))


def run_single_qubit(sc: Scenario, out: Path) -> FidelityReport:
    path = path_from_descriptor(sc.gate)
    params = sc.device
    sched = synthesize_pulse(path, omega_max=params.omega_max, samples=sc.samples)
    phases = phase_decomposition(path, sched)
    errored = octrobust.apply_error(sched, octrobust.SystematicError(sc.epsilon))
    label = sc.initial_state or _default_initial(path.family)
    psi0 = INITIAL_STATES[label]
    target = path_target(path)
    psi_t = target @ psi0
    traj = transmon1q.simulate_gate(errored, params, sc.drag, pure_density(psi0, 3), dt=sc.dt)
    rows = transmon1q.trajectory_rows(traj, psi_t)
    chan = transmon1q.gate_channel(errored, params, sc.drag, dt=sc.dt)
    gate_f = transmon1q.gate_fidelity_1q(chan, target, sc.theta_samples)
    sched.write(out / "pulse.csv", out / "pulse.json")
    transmon1q.write_trajectory_csv(out / "trajectory.csv", rows)
    return FidelityReport(
        kind=sc.kind, scenario=_echo(sc), tau_ns=sched.tau, peak_amplitude_rad_per_ns=errored.peak,
        state_fidelity=rows[-1][-1], gate_fidelity=gate_f,
        phases=phases._asdict(),
        solver={"dt_ns": sc.dt, "steps": transmon1q.gate_grid(sched, sc.dt).steps,
                "samples": sc.samples, "theta_samples": sc.theta_samples},
        extra={"initial_state": label, "leakage": transmon1q.leakage(traj.final),
               "drag": asdict(sc.drag), "epsilon": sc.epsilon},
    )


def run_pulse_synthesis(sc: Scenario, out: Path) -> FidelityReport:
    path = path_from_descriptor(sc.gate)
    sched = synthesize_pulse(path, omega_max=sc.device["omega_max"], samples=sc.samples)
    phases = phase_decomposition(path, sched)
    sched.write(out / "pulse.csv", out / "pulse.json")
    notes = ["gamma = 0: the synthesized loop realizes the identity"] if sc.gate["gamma"] == 0 else []
    return FidelityReport(
        kind=sc.kind, scenario=_echo(sc), tau_ns=sched.tau, peak_amplitude_rad_per_ns=sched.peak,
        phases=phases._asdict(), solver={"samples": sc.samples}, warnings=notes,
    )


def run_sweep(sc: Scenario, out: Path) -> FidelityReport:
    g = sc.gate
    spec = octrobust.GateSpec(
        family=g["family"], gamma=g["gamma"], eta=g.get("eta", 0.2), chi0=g.get("chi0", 0.0),
        beta0=g.get("beta0", 0.0), omega_max=sc.device.omega_max, alpha=sc.device.alpha,
        drag=sc.drag, samples=sc.samples,
    )
    res = octrobust.robustness_sweep(spec, sc.sweep, sc.decoherence, dt=sc.dt, workers=sc.workers)
    res.write_csv(out / "sweep.csv")
    res.write_json(out / "sweep.json")
    return FidelityReport(
        kind=sc.kind, scenario=_echo(sc), tau_ns=res.tau, solver={"dt_ns": sc.dt, "samples": sc.samples},
        extra={"shape": list(res.fidelity.shape), "min_fidelity": float(res.fidelity.min()),
               "max_fidelity": float(res.fidelity.max())},
    )


TWO_QUBIT_LABELS = [f"p{a}{b}" for a in range(3) for b in range(3)]


def run_two_qubit(sc: Scenario, out: Path) -> FidelityReport:
    params = sc.device
    g = sc.gate
    drive, sched = twoq.build_cphase_drive(g["gamma"], g["tau_prime"], params, eta=g["eta"], samples=sc.samples)
    u = twoq.cphase_propagator(params, drive, sc.dt)
    diag = twoq.cphase_diagnostics(u)
    chan = twoq.cphase_channel(params, drive, sc.dt)
    gate_f = twoq.gate_fidelity_2q(chan, g["gamma"], sc.fidelity_samples, sc.layout)
    psi0 = twoq.product_inputs(np.array([[math.pi / 4, math.pi / 4]]))[0]
    psi_t = psi0.copy()
    psi_t[twoq.level(1, 1)] *= np.exp(1j * g["gamma"])
    traj = twoq.simulate_cphase(params, drive, pure_density(psi0), sc.dt)
    step = max(1, math.ceil(traj.times.size / transmon1q.MAX_CSV_ROWS))
    idx = list(range(0, traj.times.size, step))
    if idx[-1] != traj.times.size - 1:
        idx.append(traj.times.size - 1)
    pops = traj.populations()
    rows = [(traj.times[i], *pops[i], state_fidelity(traj.states[i], psi_t)) for i in idx]
    drive.write_csv(out / "drive.csv")
    write_rows(out / "trajectory.csv", ["t_ns", *TWO_QUBIT_LABELS, "fidelity"], rows)
    return FidelityReport(
        kind=sc.kind, scenario=_echo(sc), tau_ns=drive.tau, peak_amplitude_rad_per_ns=sched.peak,
        state_fidelity=float(rows[-1][-1]), gate_fidelity=gate_f,
        solver={"dt_ns": sc.dt, "steps": twoq.gate_grid(drive, sc.dt).steps,
                "fidelity_samples": sc.fidelity_samples, "layout": sc.layout},
        extra={"closed_system": diag, "peak_lambda": float(drive.lam.max()),
               "initial_state": "|++>"},
        warnings=list(params.warnings),
    )


RUNNERS = {
    "single-qubit-gate": run_single_qubit,
    "pulse-synthesis": run_pulse_synthesis,
    "robustness-sweep": run_sweep,
    "two-qubit-cphase": run_two_qubit,
}


def run_scenario(sc: Scenario) -> FidelityReport:
    """Execute ``sc`` and write its CSV files plus ``report.json``."""
    out = Path(sc.output)
    out.mkdir(parents=True, exist_ok=True)
    report = RUNNERS[sc.kind](sc, out)
    (out / "report.json").write_text(report.to_json())
    return report
