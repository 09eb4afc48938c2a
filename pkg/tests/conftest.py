import pytest

from lptriage.corpus import load_dataset, load_sentence_labels
from lptriage.lexicon import load_lexicon
from lptriage.patterns import load_pattern_set

DATA = "src/lptriage/data"


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def pattern_set():
    return load_pattern_set()


@pytest.fixture(scope="session")
def mini_corpus():
    ds = load_dataset(f"{DATA}/mini_corpus.jsonl")
    ds.sentence_labels = load_sentence_labels(f"{DATA}/mini_corpus_sentence_labels.jsonl", ds)
    return ds


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_dataset(f"{DATA}/fixtures_motivating.jsonl")
