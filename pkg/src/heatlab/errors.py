"""Exception types shared across the package."""


class HeatlabError(Exception):
    """Base class for all package errors."""


class SpecValidationError(HeatlabError, ValueError):
    """An environment or experiment spec is internally inconsistent."""


class MomentMarginError(SpecValidationError):
    """Requested moment exponents are not covered by the tail indices."""


class AssemblyError(HeatlabError, ValueError):
    """Generator assembly failed (bad field values, wrong shapes)."""


class SolverError(HeatlabError, RuntimeError):
    """A linear solve did not converge to the requested residual."""


class PositivityError(HeatlabError, RuntimeError):
    """A computed kernel dipped below the allowed undershoot."""


class GeometryError(HeatlabError, ValueError):
    """Points, radii or regions do not fit in the box."""


class PairingError(HeatlabError, ValueError):
    """Two artifacts that must share a grid/source do not match."""


class ModeError(HeatlabError, ValueError):
    """Operation requested in an unsupported speed-measure or domain mode."""


class SequenceError(HeatlabError, ValueError):
    """A chain or point sequence violates its geometric constraints."""


class ConfigurationError(HeatlabError, ValueError):
    """Exponent or parameter combination outside the usable range."""


class FormatError(HeatlabError, ValueError):
    """An on-disk artifact is malformed (bad JSON, wrong sizes, bad version)."""


class ResourceGuardError(HeatlabError, RuntimeError):
    """A configured wall-clock or memory cap was exceeded mid-run."""
