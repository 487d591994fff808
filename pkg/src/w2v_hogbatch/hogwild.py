"""Baseline trainer: skip-gram negative sampling with lock-free Hogwild SGD.

One window task is a target word plus its ``N`` context words. For every
context word the target (label 1) and ``K`` freshly drawn negatives
(label 0) are visited in turn; each visit takes one dot product, updates the
output row immediately and accumulates the input-row gradient in ``temp``,
which is applied once all ``K + 1`` outputs are done.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import TrainingConfig, TrainingReport
from .corpus import EncodedCorpus
from .model import EmbeddingModel
from .sampling import SIGMOID_MODES, NegativeSampleTable, Rng
from .training import Trainer


@dataclass(frozen=True)
class WindowTask:
    target: int
    inputs: tuple[int, ...]

    def __post_init__(self):
        if len(self.inputs) < 1:
            raise ValueError("a window task needs at least one input word")


@dataclass
class UpdateStats:
    dot_products: int = 0
    rows_written: int = 0


def train_window_hogwild(model: EmbeddingModel, task: WindowTask, negative: int, alpha: float,
                         table: NegativeSampleTable, rng: Rng, sigmoid_mode: str = "exact",
                         allow_target_negative: bool = False) -> UpdateStats:
    """Run the per-input-word SGD loop of one window task in place on ``model``."""
    stats = np.zeros(K.N_STATS, dtype=np.int64)
    temp = np.empty(model.dim, dtype=np.float64)
    state = rng.as_array()
    for w in task.inputs:
        K.hogwild_input(model.m_in, model.m_out, w, task.target, negative, alpha, table.table, state,
                        SIGMOID_MODES[sigmoid_mode], K.SIGMOID_TABLE_VALUES,
                        allow_target_negative, temp, stats)
    rng.sync_from(state)
    return UpdateStats(int(stats[K.ST_DOTS]), int(stats[K.ST_ROW_WRITES]))


def run_hogwild(model: EmbeddingModel, corpus: EncodedCorpus, config: TrainingConfig,
                table: NegativeSampleTable | None = None) -> TrainingReport:
    """Train ``model`` in place over ``config.iterations`` epochs of ``corpus``."""
    return Trainer("hogwild", model, corpus, config, table).run()
