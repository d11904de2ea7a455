"""Exception hierarchy for ecolisim."""


class EcolisimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EcolisimError):
    """Invalid configuration, parameters, or mismatched inputs."""


class DomainError(EcolisimError):
    """A value lies outside the mathematical domain of an operation."""


class NumericsError(EcolisimError):
    """The numerical state became invalid (negativity beyond slack, non-finite values)."""


class SolverError(EcolisimError):
    """An iterative solver failed to converge within its budget."""


class SnapshotFormatError(EcolisimError):
    """A snapshot file is malformed or has an unsupported version."""
