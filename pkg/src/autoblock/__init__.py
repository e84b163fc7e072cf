"""Self-tuning MCMC engine that searches for an efficient parameter blocking.

The engine samples hierarchical models with adaptive scalar and block
random-walk Metropolis samplers, measures effective samples per second of
sampler runtime, and iteratively regroups parameters (by clustering their
empirical posterior correlations) until the measured efficiency stops
improving.
"""

from .errors import (
    ArityMismatchError,
    CycleError,
    DegenerateChainError,
    InvalidParameterError,
    LengthMismatchError,
    ModelError,
    TooFewSamplesError,
    UnknownReferenceError,
)
from .graph import ModelGraph, build_graph, load_model
from .samplers import BlockSampler, ChainMatrix, SamplerPlan, ScalarSampler, run_mcmc
from .diagnostics import (
    EfficiencyReport,
    efficiency_report,
    integrated_autocorrelation_time,
)
from .clustering import (
    Dendrogram,
    complete_linkage,
    correlation_matrix,
    cut,
    distance_matrix,
    plan_from_partition,
)
from .search import AutoblockConfig, AutoblockTrace, autoblock, score_candidate

__version__ = "0.1.0"

__all__ = [
    "ArityMismatchError",
    "AutoblockConfig",
    "AutoblockTrace",
    "BlockSampler",
    "ChainMatrix",
    "CycleError",
    "Dendrogram",
    "DegenerateChainError",
    "EfficiencyReport",
    "InvalidParameterError",
    "LengthMismatchError",
    "ModelError",
    "ModelGraph",
    "SamplerPlan",
    "ScalarSampler",
    "TooFewSamplesError",
    "UnknownReferenceError",
    "autoblock",
    "build_graph",
    "complete_linkage",
    "correlation_matrix",
    "cut",
    "distance_matrix",
    "efficiency_report",
    "integrated_autocorrelation_time",
    "load_model",
    "plan_from_partition",
    "run_mcmc",
    "score_candidate",
]
