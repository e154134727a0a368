"""Nonadiabatic geometric gates on transmons: pulse synthesis, open-system simulation, robustness."""

from .errors import ConfigError, GeomGateError, InputError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigError", "GeomGateError", "InputError", "NumericalError", "__version__"]
