"""In-process simulation of data-parallel training with model averaging.

``W`` workers each hold a full replica of the model and train on their own
shard of the corpus (equal byte ranges). At every barrier the replicas are
replaced by their elementwise mean. :func:`synchronize` is a pure function
of the replicas so a networked all-reduce could stand in for it.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .config import TrainingConfig, TrainingReport
from .corpus import EncodedCorpus
from .model import EmbeddingModel, init_model
from .sampling import NegativeSampleTable, Rng
from .training import UNLIMITED, Trainer, table_for


@dataclass(frozen=True)
class SyncPolicy:
    """When replicas are averaged.

    ``period_words`` is counted per worker and checked at sentence
    boundaries; ``None`` disables periodic syncs. With ``at_epoch_end`` a
    barrier is also placed at the end of every epoch. A final sync always
    closes the run.
    """

    period_words: int | None = None
    at_epoch_end: bool = False
    reducer: str = "average"

    def __post_init__(self):
        if self.period_words is not None and self.period_words < 1:
            raise ValueError("period_words must be >= 1")
        if self.reducer != "average":
            raise ValueError(f"unsupported reducer {self.reducer!r}")

    @classmethod
    def from_config(cls, config: TrainingConfig) -> "SyncPolicy":
        return cls(config.sync_period_words or None, config.sync_every_epoch)


@dataclass
class WorkerReplica:
    replica: EmbeddingModel
    shard: tuple[int, int]
    trainer: Trainer
    words_since_sync: int = 0


@dataclass
class DistributedResult:
    model: EmbeddingModel
    reports: list[TrainingReport]
    rounds: list[dict] = field(default_factory=list)

    def combined_report(self) -> TrainingReport:
        first = self.reports[0]
        return TrainingReport(
            trainer=first.trainer,
            threads=sum(r.threads for r in self.reports),
            epochs=first.epochs,
            words_processed=sum(r.words_processed for r in self.reports),
            wall_seconds=max(r.wall_seconds for r in self.reports),
            total_row_updates=sum(r.total_row_updates for r in self.reports),
            dot_products=sum(r.dot_products for r in self.reports),
            gemm_calls=sum(r.gemm_calls for r in self.reports),
            positions=sum(r.positions for r in self.reports),
            final_alpha=min(r.final_alpha for r in self.reports),
            sync_rounds=self.rounds,
        )


def synchronize(replicas: list[EmbeddingModel]) -> EmbeddingModel:
    """Average all replicas elementwise and write the mean back into each.

    Values are sorted across workers before summation so the result does
    not depend on worker order; elements already in consensus are kept
    as-is.
    """
    if not replicas:
        raise ValueError("no replicas to synchronize")
    shape = replicas[0].m_in.shape
    for r in replicas:
        if r.m_in.shape != shape or r.m_out.shape != shape:
            raise ValueError(f"replica shape {r.m_in.shape} differs from {shape}")
    if len(replicas) == 1:
        return replicas[0]
    for name in ("m_in", "m_out"):
        stacked = np.stack([getattr(r, name) for r in replicas])
        mean = np.sort(stacked.astype(np.float64), axis=0).sum(axis=0) / len(replicas)
        consensus = (stacked == stacked[0]).all(axis=0)
        mean = np.where(consensus, stacked[0], mean).astype(stacked.dtype)
        for r in replicas:
            np.copyto(getattr(r, name), mean)
    return replicas[0]


def run_distributed(corpus: EncodedCorpus, config: TrainingConfig, workers: int | None = None,
                    sync: SyncPolicy | None = None, model: EmbeddingModel | None = None,
                    table: NegativeSampleTable | None = None) -> DistributedResult:
    """Train ``workers`` replicas of ``config.trainer`` over byte-range shards.

    With ``model=None`` the starting point is ``init_model`` seeded with
    ``config.seed``, exactly as a non-distributed run. Worker ``w`` seeds
    its threads with ``seed + w * threads + thread_id``.
    """
    workers = config.workers if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be >= 1")
    sync = SyncPolicy.from_config(config) if sync is None else sync
    if model is None:
        model = init_model(len(corpus.vocab), config.dim, Rng(config.seed), config.np_dtype)
    table = table if table is not None else table_for(corpus, config)

    replicas = []
    for w, (lo, hi) in enumerate(corpus.partition(workers)):
        replica = model.copy() if workers > 1 else model
        trainer = Trainer(config.trainer, replica, corpus.slice(lo, hi), config, table,
                          seed_offset=w * config.threads)
        replicas.append(WorkerReplica(replica, (lo, hi), trainer))

    budget = UNLIMITED
    if sync.period_words is not None:
        budget = math.ceil(sync.period_words / config.threads)
    rounds: list[dict] = []
    t0 = time.perf_counter()
    while True:
        before = [rep.trainer.words_processed for rep in replicas]
        errors: list[BaseException] = []

        def advance(rep: WorkerReplica):
            try:
                rep.trainer.step(budget, stop_at_epoch_end=sync.at_epoch_end)
            except BaseException as exc:
                errors.append(exc)

        if workers == 1:
            advance(replicas[0])
        else:
            pool = [threading.Thread(target=advance, args=(rep,), daemon=True) for rep in replicas]
            for th in pool:
                th.start()
            for th in pool:
                th.join()
        if errors:
            raise errors[0]
        for rep, b in zip(replicas, before):
            rep.words_since_sync += rep.trainer.words_processed - b
        synchronize([rep.replica for rep in replicas])
        rounds.append({
            "round": len(rounds),
            "timestamp": time.perf_counter() - t0,
            "words": [rep.words_since_sync for rep in replicas],
        })
        for rep in replicas:
            rep.words_since_sync = 0
        if all(rep.trainer.finished for rep in replicas):
            break

    final = replicas[0].replica
    if final is not model:
        np.copyto(model.m_in, final.m_in)
        np.copyto(model.m_out, final.m_out)
    return DistributedResult(model, [rep.trainer.report() for rep in replicas], rounds)
