import math

import numpy as np
import pytest

from conftest import OMEGA_MAX
from geomgate.errors import InputError
from geomgate.geompath import PulseSchedule, path_target
from geomgate.qcore import pure_density, state_fidelity
from geomgate.transmon1q import (
    DragConfig,
    QutritHamiltonian,
    TransmonParams,
    gate_channel,
    gate_fidelity_1q,
    leakage,
    qutrit_hamiltonian,
    simulate_gate,
    theta_inputs,
    trajectory_rows,
    write_trajectory_csv,
)
from geomgate.units import two_pi_mhz

NOT = np.array([[0, 1j], [1j, 0]])


def flat_schedule(omega, phi=0.0, tau=10.0, n=1001):
    t = np.linspace(0, tau, n)
    return PulseSchedule(times=t, omega=np.full(n, omega), phi=np.full(n, phi), tau=tau, omega_max=OMEGA_MAX)


@pytest.fixture(scope="module")
def closed(ref_params):
    return TransmonParams.reference(gamma=0.0)


def test_params_validation():
    with pytest.raises(InputError):
        TransmonParams(alpha=-1.0, gamma1=0, gamma2=0, omega_max=1.0)
    with pytest.raises(InputError):
        TransmonParams(alpha=1.0, gamma1=-1e-6, gamma2=0, omega_max=1.0)
    with pytest.raises(InputError):
        DragConfig(mode="literal-ish")


def test_hamiltonian_undriven(ref_params):
    h = qutrit_hamiltonian(flat_schedule(0.0), ref_params, DragConfig(), 3.0)
    assert np.allclose(h, np.diag([0, 0, -ref_params.alpha]), atol=0)


def test_hamiltonian_literal_coupling(ref_params):
    drag = DragConfig(mode="off", leak_coupling="literal")
    h = qutrit_hamiltonian(flat_schedule(OMEGA_MAX), ref_params, drag, 3.0)
    assert h[1, 2] == pytest.approx(math.sqrt(2) * OMEGA_MAX)
    assert h[0, 1] == pytest.approx(OMEGA_MAX / 2)
    ladder = qutrit_hamiltonian(flat_schedule(OMEGA_MAX), ref_params, DragConfig(mode="off"), 3.0)
    assert ladder[1, 2] == pytest.approx(math.sqrt(2) * OMEGA_MAX / 2)


def test_hamiltonian_hermitian(ref_params, phase_gate):
    ham = QutritHamiltonian(phase_gate[1], ref_params, DragConfig())
    hs = ham.sample(np.linspace(0, phase_gate[1].tau, 997))
    assert np.max(np.abs(hs - np.conj(np.swapaxes(hs, 1, 2)))) == 0.0


def test_drag_term(ref_params, phase_gate):
    sched = phase_gate[1]
    ham = QutritHamiltonian(sched, ref_params, DragConfig())
    t = sched.times[4321]
    expect = sched.envelope[4321] - 1j * sched.envelope_derivative()[4321] / ref_params.alpha
    assert ham(t)[0, 1] == pytest.approx(0.5 * expect, abs=1e-12)


def test_time_out_of_range(ref_params):
    with pytest.raises(InputError):
        qutrit_hamiltonian(flat_schedule(0.1), ref_params, DragConfig(), 11.0)


def test_leakage_suppressed_without_decoherence(closed, not_gate, phase_gate):
    for _, sched in (not_gate, phase_gate):
        traj = simulate_gate(sched, closed, DragConfig(), pure_density([1.0, 0.0], 3), record_every=None)
        assert leakage(traj.final) <= 1e-3


def test_population_conservation(ref_params, not_gate):
    traj = simulate_gate(not_gate[1], ref_params, DragConfig(), pure_density([1.0, 0.0], 3))
    assert np.max(np.abs(traj.populations().sum(axis=1) - 1)) <= 1e-8
    # ~0.1 ns cadence; the endpoint closes a shorter final interval
    assert np.allclose(np.diff(traj.times)[:-1], 0.1, atol=1e-4)


def test_channel_matches_direct(ref_params, phase_gate):
    path, sched = phase_gate
    target = path_target(path)
    chan = gate_channel(sched, ref_params, DragConfig())
    rng = np.random.default_rng(7)
    for th in rng.uniform(0, 2 * math.pi, 10):
        psi = np.array([math.cos(th), math.sin(th)])
        direct = simulate_gate(sched, ref_params, DragConfig(), pure_density(psi, 3), record_every=None)
        via = chan.apply(pure_density(psi, 3))
        out = target @ psi
        assert abs(state_fidelity(via, out) - state_fidelity(direct.final, out)) <= 1e-8


@pytest.mark.parametrize("gate", ["not_gate", "phase_gate"])
def test_two_level_limit(gate, closed, request):
    path, sched = request.getfixturevalue(gate)
    chan = gate_channel(sched, closed, DragConfig(), decouple_leakage=True)
    assert gate_fidelity_1q(chan, path_target(path)) >= 1 - 1e-6


def test_decoherence_monotonic(phase_gate):
    path, sched = phase_gate
    fids = [gate_fidelity_1q(gate_channel(sched, TransmonParams.reference(two_pi_mhz(k * 1e-3)), DragConfig()),
                             path_target(path)) for k in (0, 2, 4, 8)]
    assert all(a >= b for a, b in zip(fids, fids[1:]))


def test_identity_channel_fidelity(closed):
    chan = gate_channel(flat_schedule(0.0), closed, DragConfig())
    assert gate_fidelity_1q(chan, np.eye(2)) == pytest.approx(1.0, abs=1e-9)


def test_fidelity_is_mean_over_theta_states(ref_params, not_gate):
    path, sched = not_gate
    chan = gate_channel(sched, ref_params, DragConfig())
    ins = theta_inputs(1001)
    assert ins.shape == (1001, 2)
    assert np.allclose(ins[0], ins[-1])
    direct = np.mean([state_fidelity(chan.apply(pure_density(p, 3)), NOT @ p) for p in ins])
    assert gate_fidelity_1q(chan, NOT) == pytest.approx(direct, abs=1e-12)
    with pytest.raises(InputError):
        gate_fidelity_1q(chan, NOT, theta_samples=1)


def test_trajectory_rows(tmp_path, ref_params, not_gate):
    traj = simulate_gate(not_gate[1], ref_params, DragConfig(), pure_density([1.0, 0.0], 3), record_every=0.01)
    rows = trajectory_rows(traj, [0.0, 1.0])
    assert len(rows) <= 2000
    assert rows[-1][0] == pytest.approx(not_gate[1].tau)
    assert rows[-1][-1] == state_fidelity(traj.final, [0.0, 1.0])
    write_trajectory_csv(tmp_path / "t.csv", rows)
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t_ns,p0,p1,p2,fidelity"
