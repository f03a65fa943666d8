import os

import numpy as np
import pytest

from lexlearn.lexicon import (CueInventory, LexiconEntry, build_form_matrix,
                              load_embeddings, load_lexicon)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixture_paths():
    return {
        "lexicon": os.path.join(FIXTURES, "lexicon.tsv"),
        "embeddings": os.path.join(FIXTURES, "embeddings.txt"),
        "trials": os.path.join(FIXTURES, "trials.tsv"),
    }


@pytest.fixture(scope="session")
def fixture_lexicon(fixture_paths):
    """Bundled 13-word lexicon with inventory and matrices."""
    entries = load_lexicon(fixture_paths["lexicon"])
    inventory = CueInventory.from_entries(entries)
    c = build_form_matrix(entries, inventory)
    s = load_embeddings(fixture_paths["embeddings"], entries)
    return entries, inventory, c, s


def make_entries(unit_lists, frequencies=None, forms=None):
    """Entries straight from unit tuples, for matrix-level tests."""
    n = len(unit_lists)
    frequencies = frequencies or [1] * n
    forms = forms or ["".join(units) for units in unit_lists]
    return [LexiconEntry(form=forms[i], units=tuple(unit_lists[i]),
                         frequency=frequencies[i], sem_index=i)
            for i in range(n)]


@pytest.fixture(scope="session")
def toy_invertible():
    """6 words whose binary form matrix is invertible, with fixed targets.

    Lower-triangular cue pattern: word i carries cues 0..i.
    """
    c = np.tril(np.ones((6, 6)))
    rng = np.random.default_rng(99)
    s = rng.normal(size=(6, 4))
    return c, s
