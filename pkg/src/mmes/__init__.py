"""Mixture-model evolution strategy for large-scale black-box optimization."""

__version__ = "0.1.0"

from .archive import DirectionArchive
from .errors import NumericalError, ObjectiveError, ParameterError
from .fms import BaseDistribution, MixtureParams, sample_mutation, sample_mutations, sample_target, target_covariance
from .optimizer import MmesConfig, RunTrace, Status, default_config, run, run_with_restarts, step
from .problems import Problem, gram_schmidt_rotation, parse_problem
from .pta import PtaState, RecombinationWeights
from .rand import make_rng

__all__ = [
    "BaseDistribution", "DirectionArchive", "MixtureParams", "MmesConfig", "NumericalError",
    "ObjectiveError", "ParameterError", "Problem", "PtaState", "RecombinationWeights", "RunTrace",
    "Status", "default_config", "gram_schmidt_rotation", "make_rng", "parse_problem", "run",
    "run_with_restarts", "sample_mutation", "sample_mutations", "sample_target", "step",
    "target_covariance",
]
