"""Corpus ingestion, vocabulary construction and subsampling."""

from __future__ import annotations

import io
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator

import numpy as np

MAX_SENTENCE_LENGTH = 1000


class EmptyVocabularyError(ValueError):
    pass


class CorpusReadError(IOError):
    """I/O failure while reading a corpus, tagged with the byte offset reached."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Vocabulary:
    """Immutable word <-> id map, ids ordered by descending count.

    Ties are broken lexicographically so ids are deterministic.
    """

    words: tuple[tuple[str, int], ...]
    index: dict[str, int] = field(repr=False)
    total_words: int

    @classmethod
    def from_counts(cls, counts: Iterable[tuple[str, int]]) -> "Vocabulary":
        items = sorted(counts, key=lambda wc: (-wc[1], wc[0]))
        if not items:
            raise EmptyVocabularyError("no token survived min_count")
        words = tuple((w, int(c)) for w, c in items)
        index = {w: i for i, (w, _) in enumerate(words)}
        if len(index) != len(words):
            raise ValueError("duplicate token in vocabulary")
        return cls(words=words, index=index, total_words=sum(c for _, c in words))

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def token(self, word_id: int) -> str:
        return self.words[word_id][0]

    def count(self, word_id: int) -> int:
        return self.words[word_id][1]

    @property
    def tokens(self) -> list[str]:
        return [w for w, _ in self.words]

    @property
    def counts(self) -> np.ndarray:
        return np.array([c for _, c in self.words], dtype=np.int64)

    def keep_probabilities(self, sample: float) -> np.ndarray:
        """Per-id subsampling keep probability, see :func:`keep_probability`."""
        return np.array(
            [keep_probability(c, sample, self.total_words) for _, c in self.words],
            dtype=np.float64,
        )

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for w, c in self.words:
                fh.write(f"{w} {c}\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Vocabulary":
        counts = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'token count'")
                counts.append((parts[0], int(parts[1])))
        vocab = cls.from_counts(counts)
        if [w for w, _ in counts] != vocab.tokens:
            raise ValueError(f"{path}: entries are not in id order")
        return vocab


def tokenize(line: str) -> list[str]:
    return line.split()


def build_vocab(tokens: Iterable[str], min_count: int = 5) -> Vocabulary:
    """Count ``tokens`` and keep those seen at least ``min_count`` times.

    >>> v = build_vocab("the cat sat the".split(), min_count=1)
    >>> v.words, v.total_words
    ((('the', 2), ('cat', 1), ('sat', 1)), 4)
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counter = Counter(tokens)
    return Vocabulary.from_counts((w, c) for w, c in counter.items() if c >= min_count)


def keep_probability(count: int, sample: float, total_words: int) -> float:
    """Probability of keeping one occurrence of a word seen ``count`` times.

    Uses the reference word2vec rule ``(sqrt(z) + 1) / z`` with
    ``z = count / (sample * total_words)``, clamped to 1.
    """
    if sample <= 0:
        return 1.0
    z = count / (sample * total_words)
    return min(1.0, (math.sqrt(z) + 1.0) / z)


class CorpusReader:
    """Whitespace tokenizer over a byte stream.

    Newlines end sentences; sentences longer than ``max_sentence_length``
    tokens are split. Only one consumer may read a given reader.
    """

    def __init__(
        self,
        source: BinaryIO | str | os.PathLike,
        max_sentence_length: int = MAX_SENTENCE_LENGTH,
        start: int = 0,
        end: int | None = None,
    ):
        if max_sentence_length < 1:
            raise ValueError("max_sentence_length must be >= 1")
        self.source = source
        self.max_sentence_length = max_sentence_length
        self.start = start
        self.end = end
        self.offset = start

    def _open(self) -> tuple[BinaryIO, bool]:
        if isinstance(self.source, (str, os.PathLike)):
            return open(self.source, "rb"), True
        return self.source, False

    def lines(self) -> Iterator[tuple[int, list[str]]]:
        """Yield ``(byte_offset, tokens)`` for each line in the byte range."""
        fh, owned = self._open()
        try:
            self.offset = self.start
            if self.start:
                # snap forward to the first line starting at or after ``start``
                fh.seek(self.start - 1)
                self.offset = self.start - 1 + len(fh.readline())
            while self.end is None or self.offset < self.end:
                try:
                    raw = fh.readline()
                except OSError as exc:
                    raise CorpusReadError(str(exc), self.offset) from exc
                if not raw:
                    break
                line_offset = self.offset
                self.offset += len(raw)
                try:
                    text = raw.decode("utf-8")
                except UnicodeDecodeError as exc:
                    raise CorpusReadError(f"invalid UTF-8: {exc.reason}", line_offset + exc.start) from exc
                yield line_offset, tokenize(text)
        finally:
            if owned:
                fh.close()

    def __iter__(self) -> Iterator[list[str]]:
        """Yield token lists, one per (possibly split) sentence."""
        cap = self.max_sentence_length
        for _, toks in self.lines():
            for i in range(0, len(toks), cap):
                yield toks[i : i + cap]

    def tokens(self) -> Iterator[str]:
        for _, toks in self.lines():
            yield from toks


def iter_sentences(reader: CorpusReader, vocab: Vocabulary) -> Iterator[list[int]]:
    """Yield word-id sentences; OOV tokens are dropped before the length cap."""
    for _, ids in _iter_id_lines(reader, vocab):
        yield from ids


def _iter_id_lines(reader: CorpusReader, vocab: Vocabulary) -> Iterator[tuple[int, list[list[int]]]]:
    index = vocab.index
    cap = reader.max_sentence_length
    for offset, toks in reader.lines():
        ids = [index[t] for t in toks if t in index]
        if ids:
            yield offset, [ids[i : i + cap] for i in range(0, len(ids), cap)]


@dataclass
class EncodedCorpus:
    """A corpus held in memory as one flat id array plus sentence offsets.

    ``sentence_starts`` has one entry per sentence plus a terminating
    sentinel; ``byte_offsets`` gives the source byte offset of the line each
    sentence came from, used for byte-range partitioning across threads.
    """

    vocab: Vocabulary
    ids: np.ndarray
    sentence_starts: np.ndarray
    byte_offsets: np.ndarray
    nbytes: int
    byte_start: int = 0

    @classmethod
    def from_reader(cls, reader: CorpusReader, vocab: Vocabulary) -> "EncodedCorpus":
        flat: list[int] = []
        starts = [0]
        offsets: list[int] = []
        for offset, sentences in _iter_id_lines(reader, vocab):
            for sent in sentences:
                flat.extend(sent)
                starts.append(len(flat))
                offsets.append(offset)
        return cls(
            vocab=vocab,
            ids=np.asarray(flat, dtype=np.int32),
            sentence_starts=np.asarray(starts, dtype=np.int64),
            byte_offsets=np.asarray(offsets, dtype=np.int64),
            nbytes=max(reader.offset - reader.start, 0),
        )

    @classmethod
    def from_sentences(cls, sentences: Iterable[Iterable[int]], vocab: Vocabulary) -> "EncodedCorpus":
        """Build from id sentences directly; byte offsets are synthetic."""
        flat: list[int] = []
        starts = [0]
        for sent in sentences:
            flat.extend(int(i) for i in sent)
            starts.append(len(flat))
        n = len(starts) - 1
        return cls(
            vocab=vocab,
            ids=np.asarray(flat, dtype=np.int32),
            sentence_starts=np.asarray(starts, dtype=np.int64),
            byte_offsets=np.arange(n, dtype=np.int64),
            nbytes=n,
        )

    @property
    def n_sentences(self) -> int:
        return len(self.sentence_starts) - 1

    @property
    def n_words(self) -> int:
        return int(self.sentence_starts[-1])

    def words_in(self, lo: int, hi: int) -> int:
        return int(self.sentence_starts[hi] - self.sentence_starts[lo])

    def partition(self, parts: int) -> list[tuple[int, int]]:
        """Split into ``parts`` sentence ranges by equal byte ranges.

        Each split point is snapped forward to the first sentence starting
        at or after ``k * nbytes / parts``, i.e. the next newline.
        """
        if parts < 1:
            raise ValueError("parts must be >= 1")
        size = self.nbytes
        if self.n_sentences:
            size = max(size, int(self.byte_offsets[-1]) + 1 - self.byte_start)
        bounds = [0]
        for k in range(1, parts):
            cut = self.byte_start + (size * k) // parts
            bounds.append(int(np.searchsorted(self.byte_offsets, cut, side="left")))
        bounds.append(self.n_sentences)
        return [(bounds[k], max(bounds[k], bounds[k + 1])) for k in range(parts)]

    def slice(self, lo: int, hi: int) -> "EncodedCorpus":
        """Sentences ``[lo, hi)`` as a corpus sharing this one's arrays."""
        if lo == 0 and hi == self.n_sentences:
            return self
        start = self.byte_start if lo == 0 else int(self.byte_offsets[lo])
        end = self.byte_start + self.nbytes if hi >= self.n_sentences else int(self.byte_offsets[hi])
        base = self.sentence_starts[lo]
        return EncodedCorpus(
            vocab=self.vocab,
            ids=self.ids[base : self.sentence_starts[hi]],
            sentence_starts=self.sentence_starts[lo : hi + 1] - base,
            byte_offsets=self.byte_offsets[lo:hi],
            nbytes=max(end - start, 0),
            byte_start=start,
        )

    def prefix(self, max_words: int) -> "EncodedCorpus":
        """Leading sentences holding at most ``max_words`` words."""
        hi = int(np.searchsorted(self.sentence_starts, max_words, side="right")) - 1
        hi = max(hi, 0)
        return EncodedCorpus(
            vocab=self.vocab,
            ids=self.ids[: self.sentence_starts[hi]],
            sentence_starts=self.sentence_starts[: hi + 1],
            byte_offsets=self.byte_offsets[:hi],
            nbytes=int(self.byte_offsets[hi]) if hi < self.n_sentences else self.nbytes,
        )


def read_corpus(path: str | os.PathLike, min_count: int = 5, max_sentence_length: int = MAX_SENTENCE_LENGTH,
                max_bytes: int | None = None) -> EncodedCorpus:
    """Build the vocabulary from ``path`` and encode it (two passes)."""
    vocab = build_vocab(CorpusReader(path, end=max_bytes).tokens(), min_count)
    reader = CorpusReader(path, max_sentence_length, end=max_bytes)
    return EncodedCorpus.from_reader(reader, vocab)


def corpus_from_text(text: str, min_count: int = 1, max_sentence_length: int = MAX_SENTENCE_LENGTH) -> EncodedCorpus:
    data = text.encode("utf-8")
    vocab = build_vocab(CorpusReader(io.BytesIO(data)).tokens(), min_count)
    return EncodedCorpus.from_reader(CorpusReader(io.BytesIO(data), max_sentence_length), vocab)
