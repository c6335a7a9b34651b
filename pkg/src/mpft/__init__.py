"""Multi-policy Pareto front tracking on problems with computable gradients."""

from mpft.config import ExperimentConfig, load_config, parse_config
from mpft.direction import (
    DirectionResult,
    is_pareto_stationary,
    min_norm_weights,
    min_norm_weights_2,
    pareto_ascent_direction,
    pareto_reverse_direction,
    project_simplex,
)
from mpft.errors import (
    ConfigError,
    DegenerateInputError,
    DimensionError,
    MPFTError,
    NumericError,
    TrackingError,
)
from mpft.metrics import env_steps, hypervolume, hypervolume_mc, sparsity
from mpft.pareto_core import ParetoArchive, TrackedPolicy, dominates, front, union_plus
from mpft.problems import BiQuadratic, ConcaveGap, Problem, TabularMOMDP
from mpft.sparsity import SparseRegion, sparse_regions
from mpft.tracker import RunReport, TrackConfig, run_mpft

__version__ = "0.1.0"

__all__ = [
    "BiQuadratic",
    "ConcaveGap",
    "ConfigError",
    "DegenerateInputError",
    "DimensionError",
    "DirectionResult",
    "ExperimentConfig",
    "MPFTError",
    "NumericError",
    "ParetoArchive",
    "Problem",
    "RunReport",
    "SparseRegion",
    "TabularMOMDP",
    "TrackConfig",
    "TrackedPolicy",
    "TrackingError",
    "dominates",
    "env_steps",
    "front",
    "hypervolume",
    "hypervolume_mc",
    "is_pareto_stationary",
    "load_config",
    "min_norm_weights",
    "min_norm_weights_2",
    "parse_config",
    "pareto_ascent_direction",
    "pareto_reverse_direction",
    "project_simplex",
    "run_mpft",
    "sparse_regions",
    "sparsity",
    "union_plus",
]
