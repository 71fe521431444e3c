"""Combinatorial calculus of the Kimura 3-parameter toric model on claw
trees: flows, compatible tables, degree-bounded moves, Hamming-distance
reduction, Markov-degree censuses, and Ehrhart/Hilbert invariants."""

__version__ = "0.1.0"

from .groups import FaceSpec, add, apply_aut, enumerate_flows, phi_quotient
from .tables import (CountingFunctional, Table, compatible, hamming,
                     min_hamming_pair, monomial_eval)
from .moves import Move, TraceStep, apply_move, neighbors, replay_trace
from .corpus import verify_corpus
from .reducer import (find_bad_pairs, merge_columns, random_compatible_pair,
                      reduce_pair)
from .markov import connectivity_check, fibers, minimal_generator_census
from .hilbert import (expand_series, fit_ehrhart, h_numerator, hilbert_values,
                      regularity_bound)

__all__ = [
    "FaceSpec", "add", "apply_aut", "enumerate_flows", "phi_quotient",
    "CountingFunctional", "Table", "compatible", "hamming",
    "min_hamming_pair", "monomial_eval",
    "Move", "TraceStep", "apply_move", "neighbors", "replay_trace",
    "verify_corpus",
    "find_bad_pairs", "merge_columns", "random_compatible_pair", "reduce_pair",
    "connectivity_check", "fibers", "minimal_generator_census",
    "expand_series", "fit_ehrhart", "h_numerator", "hilbert_values",
    "regularity_bound",
    "__version__",
]
