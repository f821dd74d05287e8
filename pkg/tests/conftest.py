import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import build_sts_corpus, build_word_corpus  # noqa: E402


@pytest.fixture(scope="session")
def word_corpus(tmp_path_factory):
    """Small cluster corpus with an informative middle layer."""
    root = tmp_path_factory.mktemp("word_corpus")
    return build_word_corpus(root, n_utts=30, n_layers=3, dim=16, vocab_size=8, seed=7)


@pytest.fixture(scope="session")
def sts_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("sts_corpus")
    return build_sts_corpus(root, n_pairs=12, n_speakers=2, seed=3)
