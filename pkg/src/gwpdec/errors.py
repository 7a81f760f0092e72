"""Exception types shared across the package."""


class GwpdecError(Exception):
    """Base class for all package errors."""


class ContractError(GwpdecError, ValueError):
    """Caller violated an operation contract (shape, dimension, hbar mismatch)."""


class DomainError(GwpdecError, ValueError):
    """Input is outside the mathematical domain (e.g. Im(A) not positive definite)."""


class ConfigError(GwpdecError, ValueError):
    """Bad model name, missing parameter, or malformed scenario file."""


class PropagationError(GwpdecError, RuntimeError):
    """Numerical failure during time propagation (NaN, singular Z)."""


class ModelError(GwpdecError, RuntimeError):
    """Potential evaluation returned non-finite values."""


class ResolutionError(GwpdecError, ValueError):
    """Grid does not resolve the state it is asked to represent."""


class ConsistencyError(GwpdecError, RuntimeError):
    """Two internal routes to the same quantity disagree (bug trap)."""
