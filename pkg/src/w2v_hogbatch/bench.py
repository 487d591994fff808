"""Throughput benchmark: words/sec of both trainers across thread counts."""

from __future__ import annotations

import csv
import os
import platform
import time
from dataclasses import asdict, dataclass, field, replace

from .config import TrainingConfig
from .corpus import EncodedCorpus
from .model import init_model
from .sampling import Rng
from .training import Trainer, table_for

CSV_FIELDS = ("trainer", "threads", "words_per_sec", "row_writes", "gemm_calls", "wall_seconds")

# Published single-node figures on a 36-core Broadwell, shown for context only.
PUBLISHED_REFERENCE = (
    "published reference (36-core Xeon E5-2697 v4): original word2vec 1.6M words/sec, "
    "HogBatch 5.8M words/sec (3.6x)"
)


@dataclass
class BenchRecord:
    trainer: str
    threads: int
    words_per_sec: float
    row_writes: int
    gemm_calls: int
    wall_seconds: float
    words_processed: int = 0
    error: str | None = None


@dataclass
class BenchReport:
    records: list[BenchRecord] = field(default_factory=list)
    machine: str = ""

    def rate(self, trainer: str, threads: int) -> float | None:
        for r in self.records:
            if r.trainer == trainer and r.threads == threads and r.error is None:
                return r.words_per_sec
        return None

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_FIELDS)
            for r in self.records:
                writer.writerow([getattr(r, f) for f in CSV_FIELDS])

    def to_dict(self) -> dict:
        return {"machine": self.machine, "records": [asdict(r) for r in self.records],
                "reference": PUBLISHED_REFERENCE}

    def summary(self) -> str:
        lines = [f"machine: {self.machine}", f"{'trainer':<10}{'threads':>8}{'Mwords/s':>12}{'row_writes':>14}"]
        for r in self.records:
            rate = "error" if r.error else f"{r.words_per_sec / 1e6:.3f}"
            lines.append(f"{r.trainer:<10}{r.threads:>8}{rate:>12}{r.row_writes:>14}")
        lines.append(PUBLISHED_REFERENCE)
        return "\n".join(lines)

    def plot(self, path: str | os.PathLike) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.5))
        for trainer in sorted({r.trainer for r in self.records}):
            pts = sorted((r.threads, r.words_per_sec / 1e6) for r in self.records
                         if r.trainer == trainer and r.error is None)
            if pts:
                ax.plot(*zip(*pts), marker="o", label=trainer)
        ax.set_xlabel("threads")
        ax.set_ylabel("million words/sec")
        ax.set_title(self.machine, fontsize=8)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def machine_descriptor() -> str:
    return f"{platform.machine()} {platform.processor() or platform.platform()}, {os.cpu_count()} logical CPUs"


def run_bench(corpus: EncodedCorpus, config: TrainingConfig, thread_list: list[int],
              trainers=("hogwild", "hogbatch"), max_words: int | None = None) -> BenchReport:
    """Time every trainer at every thread count on the same corpus prefix.

    A failing run is recorded with its error and the sweep continues.
    """
    if not thread_list:
        raise ValueError("thread_list must not be empty")
    if max_words is not None:
        corpus = corpus.prefix(max_words)
    table = table_for(corpus, config)
    report = BenchReport(machine=machine_descriptor())
    warm = corpus.prefix(2000)
    for trainer in trainers:  # keep JIT compilation out of the timings
        cfg = replace(config, trainer=trainer, threads=1, iterations=1)
        Trainer(trainer, init_model(len(corpus.vocab), cfg.dim, Rng(cfg.seed), cfg.np_dtype),
                warm, cfg, table).step()
    for trainer in trainers:
        for threads in thread_list:
            cfg = replace(config, trainer=trainer, threads=threads)
            try:
                model = init_model(len(corpus.vocab), cfg.dim, Rng(cfg.seed), cfg.np_dtype)
                tr = Trainer(trainer, model, corpus, cfg, table)
                t0 = time.perf_counter()
                tr.step()
                wall = time.perf_counter() - t0
                words = tr.words_processed
                stats = tr.report()
                report.records.append(BenchRecord(trainer, threads, words / wall if wall > 0 else 0.0,
                                                  stats.total_row_updates, stats.gemm_calls, wall, words))
            except Exception as exc:
                report.records.append(BenchRecord(trainer, threads, 0.0, 0, 0, 0.0,
                                                  error=f"{type(exc).__name__}: {exc}"))
    return report
