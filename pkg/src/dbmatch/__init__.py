"""Simulation of database matching under random column repetitions."""

from .dbgen import Database, Permutation, apply_permutation, generate_database, sample_permutation
from .detection import DetectedPattern, DetectionStatus, collapse, column_histograms, detect_pattern
from .markov_model import (
    CapacityResult,
    MarkovParams,
    conditional_entropy_rate,
    iid_capacity,
    matching_capacity,
    transition_power,
    validate_params,
)
from .matching import (
    ERASED,
    UNMATCHED,
    MatcherConfig,
    MatchResult,
    ReducedDatabase,
    evaluate,
    match_consistency,
    match_typicality,
    reduce,
)
from .repetition import RepeatedDatabase, RepetitionDistribution, RepetitionPattern, apply_repetitions, sample_pattern

__version__ = "0.1.0"
