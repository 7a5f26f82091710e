"""Exception hierarchy shared across the package."""


class QbmError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(QbmError):
    """Fock truncation size is too small or inconsistent."""


class InvalidParameterError(QbmError):
    """A physical parameter violates its positivity/finiteness constraint."""


class ShapeError(QbmError):
    """Operands have mismatched dimensions."""


class TruncationUnsafeError(QbmError):
    """A computation would be corrupted by the finite Fock basis."""


class TruncationUnsafeShiftError(TruncationUnsafeError):
    """Requested displacement exceeds the safe-shift limit of the basis."""


class UnsupportedModelError(QbmError):
    """Model is outside the quadratic-Hamiltonian / linear-channel class."""


class InvalidGridError(QbmError):
    """A time or parameter grid is empty or not ascending."""


class ResourceLimitError(QbmError):
    """Requested dimension exceeds the configured superoperator cap."""


class NoStationaryStateError(QbmError):
    """No generator eigenvalue close enough to zero."""


class InvalidCandidateError(QbmError):
    """Stationarity candidate incompatible with the model (e.g. Maxwell
    momentum marginal requested for a confined model)."""


class ConfigError(QbmError):
    """Scenario file is syntactically or semantically invalid (CLI exit 2)."""


class NumericalError(QbmError):
    """A solver failed to converge or an internal consistency check broke
    (CLI exit 3)."""
