"""Exception types shared across the package.

The command line maps these onto process exit codes: configuration problems
exit with 2, numerical failures with 3, I/O and data-format problems with 4.
"""


class PardeflError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PardeflError, ValueError):
    """Invalid argument, configuration, or violated precondition."""


class CapacityError(ConfigError):
    """A requested allocation exceeds the configured memory cap."""


class NumericalError(PardeflError, ArithmeticError):
    """Numerical failure: degenerate input, lost convergence, domain error."""


class DegenerateSpectrumError(NumericalError):
    """Eigenvalue structure too degenerate for the requested operation."""


class CoverageError(NumericalError):
    """A recorded run is too short for the requested schedule check."""


class DataFormatError(PardeflError, ValueError):
    """Malformed data file."""


class StreamError(PardeflError, RuntimeError):
    """A batch source failed or ran out mid-run."""
