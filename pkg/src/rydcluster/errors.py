"""Exception types shared across the package.

Each carries the process exit code the CLI maps it to.
"""


class RydClusterError(Exception):
    exit_code = 1


class ConfigError(RydClusterError, ValueError):
    """Invalid or mutually incompatible config fields."""

    exit_code = 2


class UnknownPresetError(ConfigError):
    exit_code = 5


class MalformedConfigError(ConfigError):
    """Config file missing, unreadable or not a JSON object."""

    exit_code = 6


class NumericalAbort(RydClusterError, RuntimeError):
    """Integration stopped: norm drift or boundary occupancy out of bounds."""

    exit_code = 3

    def __init__(self, message, t=None, value=None):
        super().__init__(message)
        self.t = t
        self.value = value


class CapacityError(RydClusterError, MemoryError):
    """Requested Hilbert space is larger than the configured cap."""

    exit_code = 4
