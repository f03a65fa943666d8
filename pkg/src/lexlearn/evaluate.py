"""Correlation-based accuracy metrics over predicted vs target vector sets.

A prediction counts as correct when its Pearson correlation with its own
target is strictly greater than with every rival candidate; exact ties count
as incorrect (conservative and deterministic; ties are measure-zero on real
data). Rank is 1 plus the number of candidates with strictly greater
correlation, and accuracy@k asks whether rank <= k.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, ShapeError
from .linalg import as_matrix, pearson_rows


@dataclass(frozen=True)
class ItemResult:
    target_correlation: float
    rank: int
    correct: bool


@dataclass
class EvalReport:
    n_items: int
    accuracy: float
    accuracy_at_k: float
    k: int
    per_item: list = field(default_factory=list)
    token_weighted_accuracy: float | None = None


def correlation_accuracy(predictions, targets, candidate_targets=None,
                         own_indices=None, k=10):
    """Score predictions against their targets among a candidate set.

    With no explicit candidates, the targets themselves are the candidate
    set and item i's own target is row i. Otherwise ``own_indices[i]`` names
    the row of ``candidate_targets`` holding item i's target (which must be
    present for ranking to be meaningful).
    """
    preds = as_matrix(predictions, "predictions")
    targets = as_matrix(targets, "targets")
    if preds.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"{preds.shape[0]} predictions vs {targets.shape[0]} targets")
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if candidate_targets is None:
        candidates = targets
        own = np.arange(preds.shape[0])
    else:
        candidates = as_matrix(candidate_targets, "candidate_targets")
        if own_indices is None:
            raise InputError("own_indices is required with explicit candidates")
        own = np.asarray(own_indices, dtype=np.int64)
        if own.shape[0] != preds.shape[0]:
            raise ShapeError(
                f"{own.shape[0]} own_indices vs {preds.shape[0]} predictions")
        if np.any(own < 0) or np.any(own >= candidates.shape[0]):
            raise InputError("own-target index out of range")

    corr = pearson_rows(preds, candidates)
    per_item = []
    n_correct = 0
    n_at_k = 0
    for i in range(preds.shape[0]):
        own_score = corr[i, own[i]]
        rivals = np.delete(corr[i], own[i])
        rank = 1 + int(np.sum(corr[i] > own_score))
        correct = bool(rivals.size == 0 or np.max(rivals) < own_score)
        per_item.append(ItemResult(target_correlation=float(own_score),
                                   rank=rank, correct=correct))
        n_correct += correct
        n_at_k += rank <= k
    n = preds.shape[0]
    return EvalReport(n_items=n,
                      accuracy=n_correct / n if n else 0.0,
                      accuracy_at_k=n_at_k / n if n else 0.0,
                      k=k, per_item=per_item)


def token_weighted_accuracy(report, frequencies):
    """Accuracy with items weighted by token counts; also stored on the
    report."""
    freqs = np.asarray(frequencies, dtype=np.float64)
    if freqs.shape[0] != report.n_items:
        raise ShapeError(
            f"{freqs.shape[0]} frequencies vs {report.n_items} items")
    total = freqs.sum()
    if total <= 0:
        raise InputError("total frequency must be positive")
    hits = sum(f for f, item in zip(freqs, report.per_item) if item.correct)
    value = float(hits / total)
    report.token_weighted_accuracy = value
    return value


def target_correlation_diff(report_a, report_b):
    """Per-item target-correlation difference, a minus b.

    Positive values mean model a predicted the item's own semantics more
    faithfully than model b.
    """
    if report_a.n_items != report_b.n_items:
        raise ShapeError(
            f"{report_a.n_items} items vs {report_b.n_items} items")
    return [a.target_correlation - b.target_correlation
            for a, b in zip(report_a.per_item, report_b.per_item)]


def write_report(path, report, forms):
    """Tab-separated per-item table: form, target_correlation, rank, correct."""
    if len(forms) != report.n_items:
        raise ShapeError(f"{len(forms)} forms vs {report.n_items} items")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("form\ttarget_correlation\trank\tcorrect\n")
        for form, item in zip(forms, report.per_item):
            handle.write(f"{form}\t{format(item.target_correlation, '.12g')}"
                         f"\t{item.rank}\t{int(item.correct)}\n")
