"""Exception types raised by model construction and the sampling engine."""


class ModelError(Exception):
    """Base class for all model-specification and engine errors."""


class CycleError(ModelError):
    """The node graph contains a directed cycle."""


class UnknownReferenceError(ModelError):
    """A parameter or input refers to a node that does not exist."""


class ArityMismatchError(ModelError):
    """A distribution or deterministic op received the wrong parameters."""


class InvalidParameterError(ModelError):
    """A literal parameter value is outside its family's domain."""


class LengthMismatchError(ModelError):
    """A theta vector does not match the graph's parameter count."""


class TooFewSamplesError(ModelError):
    """Not enough retained samples to estimate correlations."""


class DegenerateChainError(ModelError):
    """Every parameter column of a chain is constant; search cannot proceed."""
