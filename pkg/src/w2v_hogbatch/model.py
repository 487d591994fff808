"""Embedding matrices, initialization, learning-rate schedule and vector files."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba as nb
import numpy as np

from .corpus import Vocabulary
from .sampling import Rng

FLOOR_FRACTION = 1e-4
ALPHA_UPDATE_WORDS = 10_000


class VectorFormatError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass
class EmbeddingModel:
    """Input and output embedding matrices, both ``V x D`` and row-major."""

    m_in: np.ndarray
    m_out: np.ndarray

    def __post_init__(self):
        if self.m_in.shape != self.m_out.shape or self.m_in.ndim != 2:
            raise ValueError(f"shape mismatch: {self.m_in.shape} vs {self.m_out.shape}")
        if not (self.m_in.flags.c_contiguous and self.m_out.flags.c_contiguous):
            raise ValueError("embedding matrices must be C-contiguous")

    @property
    def vocab_size(self) -> int:
        return self.m_in.shape[0]

    @property
    def dim(self) -> int:
        return self.m_in.shape[1]

    @property
    def dtype(self):
        return self.m_in.dtype

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.m_in.copy(), self.m_out.copy())

    def astype(self, dtype) -> "EmbeddingModel":
        return EmbeddingModel(np.ascontiguousarray(self.m_in, dtype=dtype),
                              np.ascontiguousarray(self.m_out, dtype=dtype))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.m_in).all() and np.isfinite(self.m_out).all())


@nb.njit(nogil=True, cache=True)
def _fill_uniform(out, state, dim):
    flat = out.reshape(-1)
    s = state[0]
    for i in range(flat.shape[0]):
        s = s * np.uint64(25214903917) + np.uint64(11)
        flat[i] = ((s & np.uint64(0xFFFF)) / 65536.0 - 0.5) / dim
    state[0] = s


def init_model(vocab_size: int, dim: int, rng: Rng, dtype=np.float32) -> EmbeddingModel:
    """Uniform ``m_in`` in ``[-0.5/D, 0.5/D]`` drawn from ``rng``; zero ``m_out``."""
    if vocab_size < 1 or dim < 1:
        raise ValueError("vocab_size and dim must be >= 1")
    nbytes = 2 * vocab_size * dim * np.dtype(dtype).itemsize
    try:
        m_in = np.empty((vocab_size, dim), dtype=dtype)
        m_out = np.zeros((vocab_size, dim), dtype=dtype)
    except MemoryError as exc:
        raise MemoryError(f"cannot allocate embedding model ({nbytes} bytes)") from exc
    state = rng.as_array()
    _fill_uniform(m_in, state, float(dim))
    rng.sync_from(state)
    return EmbeddingModel(m_in, m_out)


@dataclass
class LearningRate:
    """Linear decay ``alpha0 * max(1 - done / (total + 1), floor_fraction)``."""

    alpha0: float
    words_total: int
    floor_fraction: float = FLOOR_FRACTION
    words_done: int = 0

    def advance(self, words: int) -> None:
        self.words_done += words


def current_alpha(lr: LearningRate) -> float:
    frac = 1.0 - lr.words_done / (lr.words_total + 1.0)
    return lr.alpha0 * max(frac, lr.floor_fraction)


def save_vectors(model: EmbeddingModel, vocab: Vocabulary | list[str], path: str | os.PathLike,
                 binary: bool = True) -> None:
    """Write ``m_in`` in the reference word2vec text or binary format."""
    tokens = vocab.tokens if isinstance(vocab, Vocabulary) else list(vocab)
    if len(tokens) != model.vocab_size:
        raise ValueError(f"{len(tokens)} tokens for {model.vocab_size} vectors")
    vectors = model.m_in.astype("<f4", copy=False)
    with open(path, "wb") as fh:
        fh.write(f"{model.vocab_size} {model.dim}\n".encode("ascii"))
        for token, row in zip(tokens, vectors):
            if binary:
                fh.write(token.encode("utf-8") + b" " + row.tobytes() + b"\n")
            else:
                values = " ".join(f"{v:.6f}" for v in row)
                fh.write(f"{token} {values}\n".encode("utf-8"))


def _parse_header(data: bytes) -> tuple[int, int, int]:
    end = data.find(b"\n")
    if end < 0:
        raise VectorFormatError("missing header line", 0)
    parts = data[:end].split()
    try:
        n_words, dim = (int(p) for p in parts)
    except ValueError:
        raise VectorFormatError(f"malformed header {data[:end][:64]!r}", 0) from None
    if n_words < 0 or dim < 1:
        raise VectorFormatError(f"malformed header {data[:end]!r}", 0)
    return n_words, dim, end + 1


def _looks_like_text(data: bytes, pos: int, dim: int) -> bool:
    end = data.find(b"\n", pos)
    line = data[pos:end if end >= 0 else len(data)]
    try:
        parts = line.decode("utf-8").split()
        if len(parts) != dim + 1:
            return False
        [float(p) for p in parts[1:]]
    except (UnicodeDecodeError, ValueError):
        return False
    return True


def load_vectors(path: str | os.PathLike, binary: bool | None = None) -> tuple[list[str], np.ndarray]:
    """Read a vector file; ``binary=None`` detects the format from the first record."""
    with open(path, "rb") as fh:
        data = fh.read()
    n_words, dim, pos = _parse_header(data)
    if binary is None:
        binary = n_words > 0 and not _looks_like_text(data, pos, dim)
    tokens: list[str] = []
    vectors = np.empty((n_words, dim), dtype=np.float32)
    if binary:
        width = 4 * dim
        for i in range(n_words):
            while pos < len(data) and data[pos : pos + 1] == b"\n":
                pos += 1
            sp = data.find(b" ", pos)
            if sp < 0:
                raise VectorFormatError(f"truncated file: record {i} has no token", pos)
            if sp + 1 + width > len(data):
                raise VectorFormatError(f"truncated file: record {i} short of {dim} values", sp + 1)
            try:
                tokens.append(data[pos:sp].decode("utf-8"))
            except UnicodeDecodeError:
                raise VectorFormatError(f"record {i}: token is not UTF-8", pos) from None
            vectors[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=sp + 1)
            pos = sp + 1 + width
    else:
        for i in range(n_words):
            end = data.find(b"\n", pos)
            if end < 0:
                end = len(data)
            if end <= pos:
                raise VectorFormatError(f"truncated file: expected {n_words} records, got {i}", pos)
            parts = data[pos:end].decode("utf-8", errors="replace").split()
            if len(parts) != dim + 1:
                raise VectorFormatError(f"record {i}: expected {dim} values, got {len(parts) - 1}", pos)
            try:
                vectors[i] = [float(v) for v in parts[1:]]
            except ValueError:
                raise VectorFormatError(f"record {i}: non-numeric value", pos) from None
            tokens.append(parts[0])
            pos = end + 1
    return tokens, vectors
