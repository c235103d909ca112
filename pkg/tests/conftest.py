import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sublm import Corpus, load_corpus

DATA_DIR = Path(__file__).parent.parent / "data" / "miniature"


@pytest.fixture(scope="session")
def miniature():
    return {
        name: load_corpus(DATA_DIR / f"{name}.txt")
        for name in ("train", "valid", "eval", "general")
    }


@pytest.fixture(scope="session")
def small_train(miniature):
    """First slice of the training split: fast fixture for module tests."""
    return Corpus.from_sentences(miniature["train"].sentences[:1500])


@pytest.fixture(scope="session")
def small_heldout(miniature):
    return Corpus.from_sentences(miniature["valid"].sentences[:400])
