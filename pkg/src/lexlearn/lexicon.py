"""Lexicon ingestion, n-gram cue extraction, form/semantic matrices, splits.

File formats
------------
Lexicon file: UTF-8, tab-separated, header ``form<TAB>frequency[<TAB>segmentation]``.
``segmentation`` holds dot-separated units (phones); when the column is absent
or empty the form is segmented into single characters.

Embedding file: UTF-8 text. Optional first line ``<count> <dim>``; every other
line is ``word v1 v2 ... vd`` with space-separated decimals.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import FileFormatError, InputError
from .linalg import as_matrix

DEFAULT_BOUNDARY = "#"
DEFAULT_NGRAM = 3

# Joiner between segments of a rendered cue when any segment is longer than
# one character (phones like "ia4" must not collide with letter sequences).
UNIT_JOINER = "·"


@dataclass(frozen=True)
class LexiconEntry:
    """One word form: surface form, segmentation, token count, row in S."""

    form: str
    units: tuple
    frequency: int
    sem_index: int

    def __post_init__(self):
        if len(self.units) == 0:
            raise InputError(f"entry '{self.form}' has no units")
        if self.frequency < 0:
            raise InputError(f"entry '{self.form}' has negative frequency")


def entry_from_form(form, frequency=0, segmentation=None, sem_index=0):
    """Build an entry, segmenting ``form`` per character unless a
    dot-separated segmentation is given."""
    if segmentation:
        units = tuple(segmentation.split("."))
    else:
        units = tuple(form)
    return LexiconEntry(form=form, units=units, frequency=int(frequency),
                        sem_index=sem_index)


def render_cue(segments):
    """Render a cue tuple as a string.

    Single-character segments concatenate directly ("#by"); as soon as any
    segment is longer, segments are joined with a middle dot ("#·i1").
    """
    if all(len(s) == 1 for s in segments):
        return "".join(segments)
    return UNIT_JOINER.join(segments)


def extract_cues(units, n=DEFAULT_NGRAM, boundary=DEFAULT_BOUNDARY):
    """All consecutive n-grams of ``units`` padded with one boundary symbol
    at each end. Duplicates are retained; matrix construction deduplicates.

    Very short words still yield at least one cue: when the padded sequence
    is shorter than n it is right-padded with the boundary until one full
    n-gram exists.
    """
    units = tuple(units)
    if len(units) == 0:
        raise InputError("cannot extract cues from an empty unit list")
    if n < 1:
        raise InputError(f"n-gram order must be >= 1, got {n}")
    padded = (boundary,) + units + (boundary,)
    if len(padded) < n:
        padded = padded + (boundary,) * (n - len(padded))
    return [render_cue(padded[i:i + n]) for i in range(len(padded) - n + 1)]


@dataclass(frozen=True)
class CueInventory:
    """Ordered, unique cue set defining the columns of the form matrix."""

    n: int
    boundary: str
    cues: tuple
    index: dict = field(repr=False)

    def __post_init__(self):
        if len(self.cues) != len(self.index):
            raise InputError("cue list contains duplicates")

    def __len__(self):
        return len(self.cues)

    @classmethod
    def from_entries(cls, entries, n=DEFAULT_NGRAM, boundary=DEFAULT_BOUNDARY):
        """Collect cues over all entries in first-occurrence order."""
        cues = []
        index = {}
        for entry in entries:
            for cue in extract_cues(entry.units, n, boundary):
                if cue not in index:
                    index[cue] = len(cues)
                    cues.append(cue)
        return cls(n=n, boundary=boundary, cues=tuple(cues), index=index)


def encode_units(units, inventory, unknown="raise"):
    """Binary cue row for one unit sequence.

    Returns (row, n_unknown). ``unknown`` is "raise" for matrix building and
    "skip" for inference on unseen forms, where unknown cues are dropped and
    counted.
    """
    row = np.zeros(len(inventory), dtype=np.float64)
    n_unknown = 0
    for cue in extract_cues(units, inventory.n, inventory.boundary):
        col = inventory.index.get(cue)
        if col is None:
            if unknown == "raise":
                raise InputError(f"cue '{cue}' is not in the inventory")
            n_unknown += 1
        else:
            row[col] = 1.0
    return row, n_unknown


def build_form_matrix(entries, inventory, unknown="raise"):
    """Binary form matrix: one row per entry, one column per inventory cue,
    1 where the cue occurs at least once (counts collapse to presence)."""
    rows = np.zeros((len(entries), len(inventory)), dtype=np.float64)
    for i, entry in enumerate(entries):
        rows[i], _ = encode_units(entry.units, inventory, unknown=unknown)
    return rows


def load_lexicon(path):
    """Read a lexicon file into entries; sem_index follows file order."""
    entries = []
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise FileFormatError("empty lexicon file", line=1)
    header = lines[0].split("\t")
    if header[:2] != ["form", "frequency"]:
        raise FileFormatError(
            "header must start with 'form<TAB>frequency'", line=1)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise FileFormatError(
                f"expected 2 or 3 tab-separated fields, got {len(fields)}",
                line=lineno)
        form = fields[0]
        if not form:
            raise FileFormatError("empty form", line=lineno)
        try:
            frequency = int(fields[1])
        except ValueError:
            raise FileFormatError(
                f"frequency '{fields[1]}' is not an integer", line=lineno)
        if frequency < 0:
            raise FileFormatError("frequency must be >= 0", line=lineno)
        segmentation = fields[2] if len(fields) == 3 else None
        entries.append(entry_from_form(form, frequency, segmentation,
                                       sem_index=len(entries)))
    return entries


def save_lexicon(path, entries):
    """Write entries back out in the documented lexicon format."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("form\tfrequency\tsegmentation\n")
        for entry in entries:
            handle.write(
                f"{entry.form}\t{entry.frequency}\t{'.'.join(entry.units)}\n")


def load_embeddings(path, entries):
    """Semantic matrix S with rows aligned to ``entries`` order.

    A duplicated word keeps its last occurrence (with a warning). Any entry
    form missing from the file raises, listing every missing form.
    """
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    start = 0
    if lines:
        head = lines[0].split()
        if len(head) == 2:
            try:
                int(head[0]), int(head[1])
            except ValueError:
                pass
            else:
                dim = int(head[1])
                start = 1
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        tokens = line.split()
        word, raw = tokens[0], tokens[1:]
        if dim is None:
            dim = len(raw)
            if dim == 0:
                raise FileFormatError("embedding row has no values",
                                      line=lineno)
        if len(raw) != dim:
            raise FileFormatError(
                f"expected {dim} values, got {len(raw)}", line=lineno)
        try:
            vec = np.array([float(v) for v in raw], dtype=np.float64)
        except ValueError:
            raise FileFormatError("non-numeric embedding value", line=lineno)
        if word in vectors:
            warnings.warn(f"duplicate embedding for '{word}'; keeping the "
                          "last occurrence")
        vectors[word] = vec
    missing = []
    for entry in entries:
        if entry.form not in vectors and entry.form not in missing:
            missing.append(entry.form)
    if missing:
        raise InputError(
            f"embeddings missing {len(missing)} form(s): {', '.join(missing)}")
    return np.stack([vectors[e.form] for e in entries])


def save_embeddings(path, forms, matrix, header=True):
    """Write embeddings in the documented text format.

    Floats use repr-precision (%.17g) so a save/load round trip is
    bit-identical.
    """
    matrix = as_matrix(matrix, "embeddings")
    if len(forms) != matrix.shape[0]:
        raise InputError(f"{len(forms)} forms but {matrix.shape[0]} rows")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        if header:
            handle.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for form, row in zip(forms, matrix):
            values = " ".join(format(v, ".17g") for v in row)
            handle.write(f"{form} {values}\n")


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/validation/test entry-index sets covering all entries.

    Every cue occurring in validation or test also occurs in at least one
    training entry.
    """

    train: tuple
    validation: tuple
    test: tuple


def split_dataset(entries, fractions=(0.8, 0.1, 0.1), seed=0,
                  n=DEFAULT_NGRAM, boundary=DEFAULT_BOUNDARY):
    """Random split with a cue-coverage repair pass.

    Indices are shuffled under ``seed`` and cut at the requested fractions;
    afterwards any validation/test item with a cue unseen in training is
    moved into training, so the final fractions are approximate.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InputError(f"fractions must sum to 1, got {sum(fractions)}")
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise InputError("fractions must be three non-negative values")
    total = len(entries)
    rng = np.random.default_rng(seed)
    perm = [int(i) for i in rng.permutation(total)]
    n_train = int(fractions[0] * total + 1e-9)
    n_val = int(fractions[1] * total + 1e-9)
    train = perm[:n_train]
    validation = perm[n_train:n_train + n_val]
    test = perm[n_train + n_val:]

    cue_sets = {i: set(extract_cues(entries[i].units, n, boundary))
                for i in range(total)}
    covered = set()
    for i in train:
        covered |= cue_sets[i]
    # Single repair pass: moving an item into training only grows coverage,
    # so items already checked stay covered.
    kept_val, kept_test = [], []
    for pool, kept in ((validation, kept_val), (test, kept_test)):
        for i in pool:
            if cue_sets[i] <= covered:
                kept.append(i)
            else:
                train.append(i)
                covered |= cue_sets[i]
    return DatasetSplit(train=tuple(sorted(train)),
                        validation=tuple(sorted(kept_val)),
                        test=tuple(sorted(kept_test)))


def frequency_rank_split(entries, fraction=0.9):
    """Split into the top ``fraction`` most frequent entries and the rest.

    Ties at the cut break by lexicographic form order, making the split
    deterministic.
    """
    if not 0.0 < fraction < 1.0:
        raise InputError(f"fraction must be in (0, 1), got {fraction}")
    order = sorted(range(len(entries)),
                   key=lambda i: (-entries[i].frequency, entries[i].form))
    cut = int(len(entries) * fraction + 1e-9)
    return tuple(order[:cut]), tuple(order[cut:])
