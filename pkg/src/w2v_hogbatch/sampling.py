"""Negative sampling table, PRNG, dynamic windows and the sigmoid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .corpus import Vocabulary

MASK64 = (1 << 64) - 1
DEFAULT_POWER = 0.75
DEFAULT_TABLE_SIZE = 100_000_000
SIGMOID_MODES = {"exact": K.SIGMOID_EXACT, "table": K.SIGMOID_TABLE}


class Rng:
    """64-bit linear congruential generator of the reference word2vec code.

    ``state <- state * 25214903917 + 11 (mod 2**64)``. Not thread-safe;
    every training thread owns one.
    """

    def __init__(self, seed: int = 1):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state * 25214903917 + 11) & MASK64
        return self.state

    def copy(self) -> "Rng":
        return Rng(self.state)

    def as_array(self) -> np.ndarray:
        return np.array([self.state], dtype=np.uint64)

    def sync_from(self, arr: np.ndarray) -> None:
        self.state = int(arr[0])

    def __repr__(self):
        return f"Rng(state={self.state})"


@dataclass(frozen=True)
class NegativeSampleTable:
    table: np.ndarray
    power: float
    counts: np.ndarray

    @property
    def size(self) -> int:
        return int(self.table.shape[0])

    @property
    def vocab_size(self) -> int:
        return int(self.counts.shape[0])


def build_unigram_table(vocab: Vocabulary | np.ndarray, power: float = DEFAULT_POWER,
                        table_size: int = DEFAULT_TABLE_SIZE) -> NegativeSampleTable:
    """Fill ``table_size`` slots so word ``i`` owns a share ``count_i**power / Z``.

    Slot boundaries are the rounded cumulative shares, so every word's slot
    count is within one of its exact share.
    """
    counts = vocab.counts if isinstance(vocab, Vocabulary) else np.asarray(vocab, dtype=np.int64)
    n_words = len(counts)
    if table_size < n_words:
        raise ValueError(f"table_size {table_size} smaller than vocabulary size {n_words}")
    weights = counts.astype(np.float64) ** power
    cum = np.cumsum(weights) / weights.sum()
    bounds = np.rint(cum * table_size).astype(np.int64)
    bounds[-1] = table_size
    slots = np.diff(bounds, prepend=0)
    table = np.repeat(np.arange(n_words, dtype=np.int32), slots)
    return NegativeSampleTable(table=table, power=power, counts=counts.copy())


def sample_negative(table: NegativeSampleTable, rng: Rng, exclude: int,
                    allow_target: bool = False) -> int:
    """Draw one negative, redrawing while it equals ``exclude``.

    After 100 failed redraws returns ``(exclude + 1) % V``.
    """
    state = rng.as_array()
    w = K.draw_negative(table.table, state, exclude, table.vocab_size, allow_target)
    rng.sync_from(state)
    return int(w)


def sample_negatives(table: NegativeSampleTable, rng: Rng, exclude: int, count: int,
                     allow_target: bool = False) -> np.ndarray:
    """``count`` successive :func:`sample_negative` draws."""
    out = np.empty(count, dtype=np.int64)
    state = rng.as_array()
    K.draw_negatives(table.table, state, exclude, table.vocab_size, allow_target, out)
    rng.sync_from(state)
    return out


def dynamic_window(max_window: int, rng: Rng) -> int:
    """Effective half-window, uniform over ``1..max_window``."""
    if max_window < 1:
        raise ValueError("max_window must be >= 1")
    return max_window - rng.next() % max_window


def sigmoid(x, mode: str = "exact"):
    """Logistic function; ``mode="table"`` uses the clamped interpolation table."""
    x = np.asarray(x, dtype=np.float64)
    if mode == "exact":
        out = 1.0 / (1.0 + np.exp(-x))
    elif mode == "table":
        grid = np.linspace(-K.MAX_EXP, K.MAX_EXP, K.EXP_TABLE_SIZE + 1)
        out = np.interp(x, grid, K.SIGMOID_TABLE_VALUES, left=0.0, right=1.0)
    else:
        raise ValueError(f"unknown sigmoid mode {mode!r}")
    return float(out) if out.ndim == 0 else out
