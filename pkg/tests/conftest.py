import os
from pathlib import Path

import numpy as np
import pytest

from w2v_hogbatch.corpus import Vocabulary, corpus_from_text
from w2v_hogbatch.sampling import NegativeSampleTable


def gensim_test_data() -> Path | None:
    try:
        import gensim
    except ImportError:
        return None
    return Path(gensim.__file__).parent / "test" / "test_data"


@pytest.fixture(scope="session")
def benchmark_files():
    root = gensim_test_data()
    if root is None or not (root / "wordsim353.tsv").exists():
        pytest.skip("gensim test data (WS-353, questions-words) not installed")
    return {"ws353": root / "wordsim353.tsv", "analogy": root / "questions-words.txt",
            "lee": root / "lee_background.cor"}


@pytest.fixture
def tiny_corpus():
    text = "the cat sat on the mat\nthe dog sat on the log\na cat and a dog\n" * 20
    return corpus_from_text(text, min_count=1)


def fixed_table(ids, vocab_size) -> NegativeSampleTable:
    """A table that only ever yields ``ids`` (cycled by the LCG)."""
    return NegativeSampleTable(np.asarray(ids, dtype=np.int32), 0.75, np.ones(vocab_size, dtype=np.int64))


def tiny_vocab(n: int) -> Vocabulary:
    return Vocabulary.from_counts((f"w{i:03d}", n - i) for i in range(n))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
