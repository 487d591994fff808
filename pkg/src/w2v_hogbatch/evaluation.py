"""Word similarity (Spearman) and analogy (3CosAdd) evaluation."""

from __future__ import annotations

import os
import re
from collections import defaultdict
from dataclasses import dataclass

import numpy as np


class ZeroVectorError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class SimilarityPair:
    word_a: str
    word_b: str
    human_score: float


@dataclass(frozen=True)
class AnalogyQuestion:
    a: str
    b: str
    c: str
    d: str
    section: str = ""


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVectorError("cosine of a zero vector is undefined")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def average_ranks(values) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(model_scores, human_scores) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    x = np.asarray(model_scores, dtype=np.float64)
    y = np.asarray(human_scores, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("score lists differ in length")
    if len(x) < 2:
        raise InsufficientDataError("need at least 2 usable pairs")
    rx = average_ranks(x) - (len(x) + 1) / 2.0
    ry = average_ranks(y) - (len(y) + 1) / 2.0
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0:
        raise InsufficientDataError("constant ranking, correlation undefined")
    return float(rx @ ry / denom)


class Embeddings:
    """Read-only lookup over a vector matrix.

    With ``case_insensitive`` tokens are lowercased and the first (most
    frequent) id wins, following the usual benchmark convention.
    """

    def __init__(self, tokens: list[str], vectors: np.ndarray, case_insensitive: bool = True):
        self.tokens = list(tokens)
        self.vectors = np.asarray(vectors)
        self.case_insensitive = case_insensitive
        self.index: dict[str, int] = {}
        for i, t in enumerate(self.tokens):
            self.index.setdefault(self._key(t), i)

    def _key(self, token: str) -> str:
        return token.lower() if self.case_insensitive else token

    def lookup(self, token: str, limit: int | None = None) -> int | None:
        i = self.index.get(self._key(token))
        if i is None or (limit is not None and i >= limit):
            return None
        return i

    def unit(self, limit: int | None = None) -> np.ndarray:
        v = self.vectors[:limit].astype(np.float64)
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return v / norms


def load_similarity_pairs(path: str | os.PathLike) -> list[SimilarityPair]:
    """Parse ``word1 word2 score`` lines split on tabs, commas or spaces.

    Comment lines (``#``) and a non-numeric header are skipped.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in re.split(r"[\t,]|\s+", line) if p]
            if len(parts) < 3:
                continue
            try:
                score = float(parts[2])
            except ValueError:
                continue  # header
            pairs.append(SimilarityPair(parts[0], parts[1], score))
    return pairs


def load_analogies(path: str | os.PathLike) -> list[AnalogyQuestion]:
    questions = []
    section = ""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                section = line[1:].strip()
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"malformed analogy line {line!r}")
            questions.append(AnalogyQuestion(*parts, section=section))
    return questions


def evaluate_similarity(emb: Embeddings, pairs: list[SimilarityPair]) -> dict:
    model_scores, human = [], []
    skipped = 0
    for p in pairs:
        ia, ib = emb.lookup(p.word_a), emb.lookup(p.word_b)
        if ia is None or ib is None:
            skipped += 1
            continue
        try:
            model_scores.append(cosine(emb.vectors[ia], emb.vectors[ib]))
        except ZeroVectorError:
            skipped += 1
            continue
        human.append(p.human_score)
    rho = spearman(model_scores, human) if len(model_scores) >= 2 else None
    return {"spearman": rho, "pairs_used": len(model_scores), "pairs_skipped": skipped}


def analogy_accuracy(emb: Embeddings, questions: list[AnalogyQuestion], top_vocab: int = 30_000,
                     chunk: int = 512) -> dict:
    """3CosAdd over the ``top_vocab`` most frequent words, excluding a, b and c.

    Questions touching a word outside ``top_vocab`` are skipped; overall
    accuracy is None when nothing is usable.
    """
    limit = min(top_vocab, len(emb.tokens))
    unit = emb.unit(limit)
    usable, skipped = [], 0
    for q in questions:
        ids = [emb.lookup(w, limit) for w in (q.a, q.b, q.c, q.d)]
        if any(i is None for i in ids):
            skipped += 1
        else:
            usable.append((q.section, ids))

    correct_by = defaultdict(int)
    total_by = defaultdict(int)
    for start in range(0, len(usable), chunk):
        block = usable[start : start + chunk]
        ids = np.array([b[1] for b in block])
        query = unit[ids[:, 1]] - unit[ids[:, 0]] + unit[ids[:, 2]]
        sims = query @ unit.T
        rows = np.arange(len(block))
        for col in range(3):
            sims[rows, ids[:, col]] = -np.inf
        pred = sims.argmax(axis=1)
        for (section, q_ids), p in zip(block, pred):
            total_by[section] += 1
            correct_by[section] += int(p == q_ids[3])

    total = sum(total_by.values())
    return {
        "analogy_overall": sum(correct_by.values()) / total if total else None,
        "analogy_by_section": {s: correct_by[s] / total_by[s] for s in total_by},
        "questions_used": total,
        "questions_skipped": skipped,
    }


def evaluate(emb: Embeddings, similarity: list[SimilarityPair] | None = None,
             analogies: list[AnalogyQuestion] | None = None, top_vocab: int = 30_000) -> dict:
    out: dict = {}
    if similarity is not None:
        out.update(evaluate_similarity(emb, similarity))
    if analogies is not None:
        out.update(analogy_accuracy(emb, analogies, top_vocab))
    return out
