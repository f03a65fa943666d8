"""Discriminative lexicon mappings between word form and meaning.

Word forms become binary n-gram cue vectors (rows of a form matrix C) and
meanings are embedding rows of a semantic matrix S. Comprehension maps C to
S and production maps S to C, either with linear mappings (closed-form,
frequency-weighted, or incrementally learned with the delta rule) or with
dense networks trained by minibatch SGD. On top sit correlation-based
evaluation, lexical-similarity measures, and trial-to-trial lexical-decision
simulation with OLS/AIC comparison plumbing.
"""

from . import (deep_map, evaluate, lexicon, linalg, linear_map, measures,
               simulate, stats)
from .exceptions import (FileFormatError, InputError, ShapeError,
                         SingularMatrixError, TrainingDivergedError)

__version__ = "0.1.0"

__all__ = [
    "deep_map", "evaluate", "lexicon", "linalg", "linear_map",
    "measures", "simulate", "stats",
    "FileFormatError", "InputError", "ShapeError", "SingularMatrixError",
    "TrainingDivergedError",
]
