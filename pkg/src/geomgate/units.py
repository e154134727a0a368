"""Unit conversion. Internally every energy and rate is in rad/ns (hbar = 1)."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi

UNIT_TAGS = ("two_pi_mhz", "rad_per_ns")


def two_pi_mhz(value):
    """Convert a frequency quoted as ``2*pi x value MHz`` to rad/ns."""
    return TWO_PI * np.asarray(value, dtype=float) * 1e-3 if np.ndim(value) else TWO_PI * float(value) * 1e-3


def to_two_pi_mhz(value):
    """Inverse of :func:`two_pi_mhz`."""
    return np.asarray(value, dtype=float) / (TWO_PI * 1e-3) if np.ndim(value) else float(value) / (TWO_PI * 1e-3)


def to_rad_per_ns(value, unit: str):
    if unit == "two_pi_mhz":
        return two_pi_mhz(value)
    if unit == "rad_per_ns":
        return float(value) if not np.ndim(value) else np.asarray(value, dtype=float)
    raise ValueError(f"unknown unit tag {unit!r}; expected one of {UNIT_TAGS}")
