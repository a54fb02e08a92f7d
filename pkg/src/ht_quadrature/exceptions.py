"""
Exception hierarchy for ht_quadrature.

Every message carries a module tag such as ``[mesh]`` so that a failure
surfacing in the CLI can be traced to its origin without a traceback.
"""

from typing import Optional


class HTQError(Exception):
    """Base class for all library errors."""

    tag = "htq"

    def __init__(self, message: str, tag: Optional[str] = None):
        self.tag = tag or self.tag
        super().__init__(f"[{self.tag}] {message}")


class InvalidArgumentError(HTQError, ValueError):
    """A precondition on an argument was violated."""


class ConfigurationError(InvalidArgumentError):
    """A configuration file or command line combination was rejected."""

    tag = "config"


class DomainError(HTQError, ValueError):
    """A kernel or transform was evaluated outside its domain."""

    tag = "kernels"


class QuadratureError(HTQError):
    """Construction of a quadrature rule failed."""

    tag = "quadrature"


class OracleConvergenceError(HTQError):
    """The spectral oracle did not certify its own truncation."""

    tag = "spectral"

    def __init__(self, message: str, certificate: float = float("nan")):
        self.certificate = certificate
        super().__init__(message)


class SingularSystemError(HTQError):
    """A dense system could not be factorized."""

    tag = "solver"


class ProjectionError(HTQError):
    """Element-wise L2 projection failed."""

    tag = "solver"
