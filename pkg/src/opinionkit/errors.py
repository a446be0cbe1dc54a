"""Shared error taxonomy.

Every raised condition maps to one of four CLI exit classes:
configuration (1), identifiability (2), numerical (3), capacity (4).
"""


class OpinionKitError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(OpinionKitError):
    """Malformed configuration, unknown keys, or inconsistent CLI arguments."""

    exit_code = 1


class ParameterError(OpinionKitError):
    """Arguments outside a function's documented domain."""

    exit_code = 1


class StructuralError(OpinionKitError):
    """Inputs whose shape or graph structure makes the operation undefined."""

    exit_code = 1


class IdentifiabilityError(OpinionKitError):
    """The requested estimate is not identifiable from the given data."""

    exit_code = 2


class StabilityError(OpinionKitError):
    """An operation requiring Schur stability was called on an unstable system."""

    exit_code = 3


class NumericalError(OpinionKitError):
    """Ill-conditioning, divergence, or failed convergence of an iteration."""

    exit_code = 3


class EstimationError(OpinionKitError):
    """A statistical fit is degenerate or has too little data to proceed."""

    exit_code = 3


class InfeasibleError(OpinionKitError):
    """A constrained program has an empty feasible set."""

    exit_code = 3


class TransformError(OpinionKitError):
    """A reparameterization left the admissible model class."""

    exit_code = 3


class CapacityError(OpinionKitError):
    """Problem size exceeds a documented combinatorial or memory cap."""

    exit_code = 4
