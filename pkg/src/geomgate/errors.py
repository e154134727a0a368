"""Exception hierarchy shared by all modules."""


class GeomGateError(Exception):
    """Base class for every error raised by the package."""


class InputError(GeomGateError, ValueError):
    """Invalid argument, malformed operator, or bad configuration value."""


class NumericalError(GeomGateError, RuntimeError):
    """A computation ran but its result failed a numerical sanity check."""


class ConfigError(InputError):
    """Scenario file failed schema validation.

    ``field`` carries the dotted path of the offending entry so the CLI can
    report it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
