"""Linear comprehension/production mappings.

Three ways to obtain the weight matrix:

- endstate estimation: ordinary least squares over all words,
- frequency-informed estimation: least squares with token-count row weights,
- incremental learning: Widrow-Hoff delta-rule updates, one (cue, target)
  pair at a time.

Weights map input rows to output rows by right-multiplication, so
predictions are ``input @ weights`` for both directions.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import FileFormatError, InputError, ShapeError
from .linalg import (LeastSquaresConfig, as_matrix, as_vector, matmul,
                     solve_least_squares)

DIRECTIONS = ("comprehension", "production")
PROVENANCES = ("endstate", "frequency_informed", "incremental")

# Default delta-rule learning rate for trial-to-trial simulation. Small
# enough for monotone error decrease with binary cue rows of realistic
# length (the rule needs eta * ||c||^2 < 2).
DEFAULT_ETA = 0.001

_MAGIC = b"LXLM"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBQQ")


@dataclass
class LinearMapping:
    """Weight matrix plus bookkeeping about where it came from."""

    weights: np.ndarray
    direction: str = "comprehension"
    provenance: str = "endstate"

    def __post_init__(self):
        self.weights = as_matrix(self.weights, "weights")
        if self.direction not in DIRECTIONS:
            raise InputError(f"unknown direction '{self.direction}'")
        if self.provenance not in PROVENANCES:
            raise InputError(f"unknown provenance '{self.provenance}'")

    @property
    def input_dim(self):
        return self.weights.shape[0]

    @property
    def output_dim(self):
        return self.weights.shape[1]


def estimate_endstate(input_matrix, target_matrix, ridge=None,
                      direction="comprehension"):
    """Least-squares mapping optimised equally across all rows."""
    weights = solve_least_squares(input_matrix, target_matrix,
                                  LeastSquaresConfig(ridge_lambda=ridge))
    return LinearMapping(weights=weights, direction=direction,
                         provenance="endstate")


def estimate_frequency_informed(input_matrix, target_matrix, frequencies,
                                ridge=None, direction="comprehension"):
    """Weighted least squares with per-row token counts as weights.

    Zero-frequency rows get weight 0 (they contribute nothing); all-zero
    frequencies are rejected.
    """
    freqs = as_vector(frequencies, "frequencies")
    if np.any(freqs < 0):
        raise InputError("frequencies must be non-negative")
    if not np.any(freqs > 0):
        raise InputError("at least one frequency must be positive")
    weights = solve_least_squares(
        input_matrix, target_matrix,
        LeastSquaresConfig(ridge_lambda=ridge, weights=freqs))
    return LinearMapping(weights=weights, direction=direction,
                         provenance="frequency_informed")


def widrow_hoff_step(mapping, cue_row, target_row, eta=DEFAULT_ETA):
    """One delta-rule update W <- W + eta * c' (t - c W), in place.

    For eta * ||c||^2 < 2 the squared error on this pair never increases,
    and strictly decreases while it is positive.
    """
    c = as_vector(cue_row, "cue_row")
    t = as_vector(target_row, "target_row")
    if c.shape[0] != mapping.input_dim:
        raise ShapeError(
            f"cue length {c.shape[0]} != input dim {mapping.input_dim}")
    if t.shape[0] != mapping.output_dim:
        raise ShapeError(
            f"target length {t.shape[0]} != output dim {mapping.output_dim}")
    if eta < 0:
        raise InputError(f"eta must be >= 0, got {eta}")
    error = t - c @ mapping.weights
    mapping.weights += eta * np.outer(c, error)
    mapping.provenance = "incremental"
    return mapping


def predict(mapping, input_matrix):
    """Predictions ``input @ weights`` for a batch of input rows."""
    return matmul(input_matrix, mapping.weights)


def save_mapping(path, mapping):
    """Binary container: magic 'LXLM', version, direction/provenance tags,
    row/col counts, then row-major little-endian float64 weights."""
    header = _HEADER.pack(_MAGIC, _VERSION,
                          DIRECTIONS.index(mapping.direction),
                          PROVENANCES.index(mapping.provenance),
                          mapping.input_dim, mapping.output_dim)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(
            mapping.weights, dtype="<f8").tobytes())


def load_mapping(path):
    """Read a mapping written by :func:`save_mapping`."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < _HEADER.size:
        raise FileFormatError("truncated mapping file")
    magic, version, direction, provenance, rows, cols = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FileFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FileFormatError(f"unsupported mapping version {version}")
    expected = _HEADER.size + rows * cols * 8
    if len(blob) != expected:
        raise FileFormatError(
            f"mapping payload is {len(blob)} bytes, expected {expected}")
    weights = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    weights = weights.reshape(rows, cols).astype(np.float64)
    return LinearMapping(weights=weights,
                         direction=DIRECTIONS[direction],
                         provenance=PROVENANCES[provenance])
