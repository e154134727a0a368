import math

import numpy as np
import pytest

from geomgate import twoq
from geomgate.geompath import build_x_rotation_path, build_z_rotation_path, synthesize_pulse
from geomgate.transmon1q import TransmonParams
from geomgate.units import two_pi_mhz

OMEGA_MAX = two_pi_mhz(16.0)


@pytest.fixture(scope="session")
def ref_params():
    return TransmonParams.reference()


@pytest.fixture(scope="session")
def not_gate():
    path = build_x_rotation_path(math.pi / 2)
    return path, synthesize_pulse(path, omega_max=OMEGA_MAX)


@pytest.fixture(scope="session")
def phase_gate():
    path = build_z_rotation_path(-math.pi / 8, 0.2)
    return path, synthesize_pulse(path, omega_max=OMEGA_MAX)


@pytest.fixture(scope="session")
def cz_params():
    return twoq.TwoTransmonParams.reference()


@pytest.fixture(scope="session")
def cz_drive(cz_params):
    return twoq.build_cphase_drive(math.pi / 2, 250.0, cz_params)


@pytest.fixture(scope="session")
def cz_unitary(cz_params, cz_drive):
    return twoq.cphase_propagator(cz_params, cz_drive[0])


@pytest.fixture(scope="session")
def cz_channel(cz_params, cz_drive):
    return twoq.cphase_channel(cz_params, cz_drive[0])


def random_density(rng, dim, support=None):
    levels = list(range(dim)) if support is None else list(support)
    a = rng.normal(size=(len(levels), len(levels))) + 1j * rng.normal(size=(len(levels), len(levels)))
    r = a @ a.conj().T
    r /= np.trace(r)
    out = np.zeros((dim, dim), dtype=complex)
    out[np.ix_(levels, levels)] = r
    return out


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
