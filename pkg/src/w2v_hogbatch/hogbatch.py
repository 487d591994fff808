"""HogBatch: skip-gram negative sampling as small dense matrix multiplies.

All ``N`` context words of a position share one set of ``K`` negatives, so
the ``N x (K+1)`` dot products become one GEMM against a gathered block of
output rows. Reads come from a snapshot taken at batch start and the
gradients are scatter-added back once per batch, without locks::

    A = M_in[inputs]            (N x D)
    B = M_out[outputs]          ((K+1) x D)
    C = A @ B.T                 scores
    E = labels - sigmoid(C)     errors
    M_in[inputs]   += alpha * E @ B
    M_out[outputs] += alpha * E.T @ A
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import TrainingConfig, TrainingReport
from .corpus import EncodedCorpus
from .model import EmbeddingModel
from .sampling import SIGMOID_MODES, NegativeSampleTable, Rng, sample_negatives
from .training import Trainer


@dataclass(frozen=True)
class Minibatch:
    input_ids: np.ndarray
    output_ids: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.input_ids) < 1 or len(self.output_ids) < 1:
            raise ValueError("a minibatch needs at least one input and one output word")
        expected = np.zeros(len(self.output_ids))
        expected[0] = 1.0
        if not np.array_equal(self.labels, expected):
            raise ValueError("labels must be one 1 followed by K zeros")

    @classmethod
    def make(cls, input_ids, output_ids) -> "Minibatch":
        out = np.asarray(output_ids, dtype=np.int64)
        labels = np.zeros(len(out))
        labels[0] = 1.0
        return cls(np.asarray(input_ids, dtype=np.int64), out, labels)

    @property
    def n_inputs(self) -> int:
        return len(self.input_ids)

    @property
    def n_outputs(self) -> int:
        return len(self.output_ids)


@dataclass
class BatchWorkspace:
    """Thread-private gathers and score/error matrices for one minibatch."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray

    @classmethod
    def gather(cls, model: EmbeddingModel, batch: Minibatch) -> "BatchWorkspace":
        n, m = batch.n_inputs, batch.n_outputs
        A = np.empty((n, model.dim))
        B = np.empty((m, model.dim))
        K.gather(model.m_in, batch.input_ids, n, A)
        K.gather(model.m_out, batch.output_ids, m, B)
        return cls(A, B, np.zeros((n, m)), np.zeros((n, m)))


def build_minibatch(sentence, position: int, half_window: int, negative: int,
                    table: NegativeSampleTable, rng: Rng,
                    allow_target_negative: bool = False) -> Minibatch | None:
    """Context words within ``half_window`` of ``position`` against the target and shared negatives.

    Returns None when no context word exists (empty batch).
    """
    lo = max(position - half_window, 0)
    hi = min(position + half_window, len(sentence) - 1)
    inputs = [sentence[c] for c in range(lo, hi + 1) if c != position]
    if not inputs:
        return None
    target = int(sentence[position])
    negs = sample_negatives(table, rng, target, negative, allow_target_negative)
    return Minibatch.make(inputs, [target, *negs])


def forward_scores(ws: BatchWorkspace, gemm: str = "naive") -> np.ndarray:
    n, m = ws.C.shape
    K.gemm_abt(ws.A, ws.B, ws.C, n, m, gemm == "blas")
    return ws.C


def compute_errors(ws: BatchWorkspace, labels: np.ndarray, sigmoid_mode: str = "exact") -> np.ndarray:
    """``E = labels - sigmoid(C)``; in table mode scores beyond +-6 give zero error."""
    n, m = ws.C.shape
    groups_in = np.zeros(n, dtype=np.int64)
    groups_out = np.zeros(m, dtype=np.int64)
    K.batch_errors(ws.C, ws.E, n, m, np.asarray(labels, dtype=np.float64), groups_in, groups_out,
                   SIGMOID_MODES[sigmoid_mode], K.SIGMOID_TABLE_VALUES)
    return ws.E


def apply_updates(model: EmbeddingModel, batch: Minibatch, ws: BatchWorkspace, alpha: float,
                  gemm: str = "naive") -> int:
    """Scatter-add both gradient blocks into ``model``; returns rows written.

    Gradients come from the snapshot in ``ws``; repeated ids accumulate.
    """
    n, m = ws.E.shape
    use_blas = gemm == "blas"
    g_in = np.empty((n, model.dim))
    g_out = np.empty((m, model.dim))
    K.grad_in(ws.E, ws.B, g_in, n, m, alpha, use_blas)
    K.grad_out(ws.E, ws.A, g_out, n, m, alpha, use_blas)
    K.scatter_add(model.m_in, batch.input_ids, n, g_in)
    K.scatter_add(model.m_out, batch.output_ids, m, g_out)
    return n + m


def train_minibatch(model: EmbeddingModel, batch: Minibatch, alpha: float, gemm: str = "naive",
                    sigmoid_mode: str = "exact") -> int:
    """Gather, score, error and write back one minibatch."""
    ws = BatchWorkspace.gather(model, batch)
    forward_scores(ws, gemm)
    compute_errors(ws, batch.labels, sigmoid_mode)
    return apply_updates(model, batch, ws, alpha, gemm)


def run_hogbatch(model: EmbeddingModel, corpus: EncodedCorpus, config: TrainingConfig,
                 table: NegativeSampleTable | None = None) -> TrainingReport:
    return Trainer("hogbatch", model, corpus, config, table).run()
