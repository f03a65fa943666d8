"""Per-word lexical-similarity measures.

- cue_overlap: mean, over the word's cues, of how many other words contain
  that cue.
- coltheart_n: number of same-length words differing in exactly one unit
  substitution (the classic neighbourhood count, over units).
- semantic_density: correlation between the word's semantic vector and its
  closest semantic neighbour.
- length: unit count.
- log_frequency: ln(1 + frequency), so zero-frequency words stay finite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError
from .linalg import as_matrix, pearson_rows


@dataclass(frozen=True)
class WordMeasures:
    form: str
    cue_overlap: float
    coltheart_n: int
    semantic_density: float
    length: int
    log_frequency: float
    # False only when there is no other word to correlate against; the
    # density is then reported as 0.
    semantic_density_defined: bool = True


def compute_measures(entries, form_matrix, semantic_matrix):
    """All five measures for every entry. Matrices must align with entries."""
    c = as_matrix(form_matrix, "form matrix")
    s = as_matrix(semantic_matrix, "semantic matrix")
    n = len(entries)
    if c.shape[0] != n or s.shape[0] != n:
        raise ShapeError(
            f"{n} entries vs {c.shape[0]} form rows / {s.shape[0]} semantic rows")

    cue_counts = c.sum(axis=0)
    if n > 1:
        corr = pearson_rows(s, s)
        np.fill_diagonal(corr, -np.inf)
        densities = corr.max(axis=1)
    else:
        densities = np.zeros(1)

    by_length = {}
    for i, entry in enumerate(entries):
        by_length.setdefault(len(entry.units), []).append(i)

    results = []
    for i, entry in enumerate(entries):
        present = c[i] > 0
        if present.any():
            overlap = float((cue_counts[present] - c[i][present]).mean())
        else:
            overlap = 0.0

        neighbours = 0
        for j in by_length[len(entry.units)]:
            if j == i:
                continue
            diffs = sum(a != b for a, b in zip(entry.units, entries[j].units))
            neighbours += diffs == 1

        results.append(WordMeasures(
            form=entry.form,
            cue_overlap=overlap,
            coltheart_n=neighbours,
            semantic_density=float(densities[i]) if n > 1 else 0.0,
            length=len(entry.units),
            log_frequency=math.log1p(entry.frequency),
            semantic_density_defined=n > 1,
        ))
    return results


def write_measures(path, measures):
    """Tab-separated measures table, one row per word, fixed header."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("form\tcue_overlap\tcoltheart_n\tsemantic_density"
                     "\tlength\tlog_frequency\n")
        for m in measures:
            handle.write(
                f"{m.form}\t{format(m.cue_overlap, '.12g')}\t{m.coltheart_n}"
                f"\t{format(m.semantic_density, '.12g')}\t{m.length}"
                f"\t{format(m.log_frequency, '.12g')}\n")
