"""Training configuration and the report emitted by every trainer."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

TRAINERS = ("hogwild", "hogbatch")
GEMM_PROVIDERS = ("naive", "blas")
DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass
class TrainingConfig:
    dim: int = 100
    negative: int = 5
    window: int = 5
    sample: float = 1e-3
    min_count: int = 5
    alpha: float = 0.025
    iterations: int = 5
    threads: int = 1
    trainer: str = "hogbatch"
    batch_windows: int = 1
    workers: int = 1
    sync_period_words: int = 0
    sync_every_epoch: bool = False
    seed: int = 1
    sigmoid_mode: str = "exact"
    negative_power: float = 0.75
    table_size: int = 100_000_000
    allow_target_negative: bool = False
    max_sentence_length: int = 1000
    gemm: str = "naive"
    dtype: str = "float32"
    binary_output: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("dim", "window", "min_count", "iterations", "threads", "batch_windows",
                     "workers", "table_size", "max_sentence_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.negative < 0:
            raise ValueError("negative must be >= 0")
        if self.sample < 0:
            raise ValueError("sample must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.sync_period_words < 0:
            raise ValueError("sync_period_words must be >= 0")
        if self.trainer not in TRAINERS:
            raise ValueError(f"unknown trainer {self.trainer!r}, expected one of {TRAINERS}")
        if self.sigmoid_mode not in ("exact", "table"):
            raise ValueError(f"unknown sigmoid mode {self.sigmoid_mode!r}")
        if self.gemm not in GEMM_PROVIDERS:
            raise ValueError(f"unknown gemm provider {self.gemm!r}")
        if self.dtype not in DTYPES:
            raise ValueError(f"unknown dtype {self.dtype!r}")

    @property
    def np_dtype(self):
        return DTYPES[self.dtype]


@dataclass
class TrainingReport:
    trainer: str
    threads: int
    epochs: int
    words_processed: int = 0
    wall_seconds: float = 0.0
    total_row_updates: int = 0
    dot_products: int = 0
    gemm_calls: int = 0
    positions: int = 0
    final_alpha: float = 0.0
    error: str | None = None
    sync_rounds: list = field(default_factory=list)

    @property
    def words_per_sec(self) -> float:
        return self.words_processed / self.wall_seconds if self.wall_seconds > 0 else 0.0

    @property
    def row_writes(self) -> int:
        return self.total_row_updates

    def to_dict(self) -> dict:
        d = asdict(self)
        d["words_per_sec"] = self.words_per_sec
        d["row_writes"] = self.total_row_updates
        if not d["sync_rounds"]:
            del d["sync_rounds"]
        if d["error"] is None:
            del d["error"]
        if self.trainer == "hogwild":
            del d["gemm_calls"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())
