"""Multi-threaded corpus traversal shared by the Hogwild and HogBatch trainers.

Each thread owns a contiguous sentence range (equal byte ranges snapped to
line starts), its own LCG seeded ``seed + thread_id`` and its own
workspaces. The model arrays are shared and written without any locking.
"""

from __future__ import annotations

import sys
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .config import TrainingConfig, TrainingReport
from .corpus import EncodedCorpus
from .model import ALPHA_UPDATE_WORDS, FLOOR_FRACTION, EmbeddingModel
from .sampling import SIGMOID_MODES, NegativeSampleTable, build_unigram_table

UNLIMITED = sys.maxsize // 4


@dataclass
class _ThreadState:
    lo: int
    hi: int
    rng: np.ndarray
    cursor: int = 0
    epoch: int = 0
    tstate: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.float64))
    stats: np.ndarray = field(default_factory=lambda: np.zeros(K.N_STATS, dtype=np.int64))

    def __post_init__(self):
        self.cursor = self.lo


def table_for(corpus: EncodedCorpus, config: TrainingConfig) -> NegativeSampleTable:
    size = max(config.table_size, len(corpus.vocab))
    return build_unigram_table(corpus.vocab, config.negative_power, size)


class Trainer:
    """Resumable training run over one corpus with ``config.threads`` threads.

    :meth:`step` advances every thread by a word budget (or to the end of
    its current epoch), which is how the distributed simulator places its
    synchronization barriers. :meth:`run` trains to completion.
    """

    def __init__(self, trainer: str, model: EmbeddingModel, corpus: EncodedCorpus,
                 config: TrainingConfig, table: NegativeSampleTable | None = None,
                 seed_offset: int = 0):
        if model.vocab_size != len(corpus.vocab):
            raise ValueError(f"model has {model.vocab_size} rows, vocabulary has {len(corpus.vocab)}")
        self.mode = {"hogwild": K.MODE_HOGWILD, "hogbatch": K.MODE_HOGBATCH}[trainer]
        self.name = trainer
        self.model = model
        self.corpus = corpus
        self.config = config
        self.table = table if table is not None else table_for(corpus, config)
        if self.table.vocab_size != model.vocab_size:
            raise ValueError("negative sample table does not match the vocabulary")
        self.keep_probs = corpus.vocab.keep_probabilities(config.sample)
        self.words_total = config.iterations * corpus.n_words
        self.progress = np.zeros(config.threads, dtype=np.int64)
        self.threads = [
            _ThreadState(lo, hi, np.array([config.seed + seed_offset + tid], dtype=np.uint64))
            for tid, (lo, hi) in enumerate(corpus.partition(config.threads))
        ]
        for ts in self.threads:
            ts.alpha[0] = config.alpha
        self.wall_seconds = 0.0

    @property
    def finished(self) -> bool:
        return all(ts.epoch >= self.config.iterations for ts in self.threads)

    def _advance(self, tid: int, budget: int, stop_at_epoch_end: bool) -> None:
        cfg = self.config
        ts = self.threads[tid]
        remaining = budget
        while ts.epoch < cfg.iterations and remaining > 0:
            start = ts.cursor
            nxt = K.train_range(
                self.mode, self.model.m_in, self.model.m_out, self.corpus.ids,
                self.corpus.sentence_starts, start, ts.hi, remaining,
                self.keep_probs, cfg.sample > 0, self.table.table, cfg.window, cfg.negative,
                cfg.batch_windows, cfg.gemm == "blas", SIGMOID_MODES[cfg.sigmoid_mode],
                K.SIGMOID_TABLE_VALUES, cfg.allow_target_negative,
                ts.rng, ts.tstate, ts.alpha, self.progress, tid, cfg.alpha,
                float(self.words_total), FLOOR_FRACTION, ALPHA_UPDATE_WORDS, ts.stats,
            )
            remaining -= self.corpus.words_in(start, nxt)
            ts.cursor = nxt
            if nxt >= ts.hi:
                ts.epoch += 1
                ts.cursor = ts.lo
                if stop_at_epoch_end:
                    break

    def step(self, budget: int = UNLIMITED, stop_at_epoch_end: bool = False) -> bool:
        """Advance each thread by ``budget`` words; returns True once all epochs are done."""
        t0 = time.perf_counter()
        if len(self.threads) == 1:
            self._advance(0, budget, stop_at_epoch_end)
        else:
            errors: list[BaseException] = []

            def target(tid):
                try:
                    self._advance(tid, budget, stop_at_epoch_end)
                except BaseException as exc:  # surfaced after join
                    errors.append(exc)

            workers = [threading.Thread(target=target, args=(tid,), daemon=True)
                       for tid in range(len(self.threads))]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
            if errors:
                raise errors[0]
        self.wall_seconds += time.perf_counter() - t0
        return self.finished

    def run(self) -> TrainingReport:
        try:
            self.step()
        except Exception as exc:
            report = self.report()
            report.error = f"{type(exc).__name__}: {exc}"
            return report
        return self.report()

    @property
    def words_processed(self) -> int:
        return int(sum(ts.stats[K.ST_WORDS] for ts in self.threads))

    def report(self) -> TrainingReport:
        stats = np.sum([ts.stats for ts in self.threads], axis=0)
        return TrainingReport(
            trainer=self.name,
            threads=self.config.threads,
            epochs=self.config.iterations,
            words_processed=int(stats[K.ST_WORDS]),
            wall_seconds=self.wall_seconds,
            total_row_updates=int(stats[K.ST_ROW_WRITES]),
            dot_products=int(stats[K.ST_DOTS]),
            gemm_calls=int(stats[K.ST_GEMM]),
            positions=int(stats[K.ST_POSITIONS]),
            final_alpha=float(min(ts.alpha[0] for ts in self.threads)),
        )
