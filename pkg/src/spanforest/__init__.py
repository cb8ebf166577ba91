"""Marked subtrees of uniform spanning trees of the killed complete graph.

Exact finite-N laws, a Wilson's-algorithm sampler, the N -> infinity limits
in the fixed and critical killing regimes, and the Gibbs partition they
induce.
"""

from .combinatorics import BinaryShape, BouquetConfig, canonical_string
from .exact_model import ModelParams, class_probability, embedded_tree_probability, green_submatrix_det
from .limit_laws import A, I
from .trees import DELTA, ReducedObservation, RootedSpanningSubtree, reduce_observation
from .wilson import WilsonSampler, killed_lerw, rng_stream, sample_reduced_subtree

__version__ = "0.1.0"

__all__ = [
    "A", "BinaryShape", "BouquetConfig", "DELTA", "I", "ModelParams", "ReducedObservation",
    "RootedSpanningSubtree", "WilsonSampler", "canonical_string", "class_probability",
    "embedded_tree_probability", "green_submatrix_det", "killed_lerw", "reduce_observation",
    "rng_stream", "sample_reduced_subtree",
]
