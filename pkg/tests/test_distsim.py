import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from w2v_hogbatch.config import TrainingConfig
from w2v_hogbatch.corpus import corpus_from_text
from w2v_hogbatch.distsim import SyncPolicy, run_distributed, synchronize
from w2v_hogbatch.hogbatch import run_hogbatch
from w2v_hogbatch.model import EmbeddingModel, init_model
from w2v_hogbatch.sampling import Rng
from w2v_hogbatch.training import Trainer, table_for


def replica(values_in, values_out=None):
    a = np.asarray(values_in, dtype=np.float32)
    b = np.asarray(values_out if values_out is not None else values_in, dtype=np.float32)
    return EmbeddingModel(a.copy(), b.copy())


def test_synchronize_two_replicas():
    r1, r2 = replica([[1.0, 2.0]]), replica([[3.0, 2.0]])
    synchronize([r1, r2])
    np.testing.assert_array_equal(r1.m_in, [[2.0, 2.0]])
    np.testing.assert_array_equal(r2.m_in, r1.m_in)
    np.testing.assert_array_equal(r2.m_out, [[2.0, 2.0]])


def test_synchronize_consensus_is_exact():
    v = np.float32(0.1)
    rs = [replica([[v, v]]) for _ in range(3)]
    synchronize(rs)
    assert rs[0].m_in[0, 0] == v  # (v+v+v)/3 may not round back to v


def test_synchronize_single_and_empty():
    r = replica([[1.5]])
    assert synchronize([r]) is r
    with pytest.raises(ValueError):
        synchronize([])
    with pytest.raises(ValueError):
        synchronize([replica([[1.0]]), replica([[1.0, 2.0]])])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.randoms(use_true_random=False))
def test_synchronize_permutation_invariant(w, seed, rnd):
    gen = np.random.default_rng(seed)
    base = [gen.standard_normal((5, 3)).astype(np.float32) for _ in range(w)]
    order = list(range(w))
    rnd.shuffle(order)
    a = [replica(x) for x in base]
    b = [replica(base[i]) for i in order]
    synchronize(a)
    synchronize(b)
    assert a[0].m_in.tobytes() == b[0].m_in.tobytes()
    mean = np.mean(np.stack(base).astype(np.float64), axis=0)
    np.testing.assert_allclose(a[0].m_in, mean, rtol=1e-6, atol=1e-7)


def test_sync_policy_validation():
    with pytest.raises(ValueError):
        SyncPolicy(period_words=0)
    with pytest.raises(ValueError):
        SyncPolicy(reducer="sum")
    cfg = TrainingConfig(sync_period_words=500, sync_every_epoch=True)
    assert SyncPolicy.from_config(cfg) == SyncPolicy(500, True)
    assert SyncPolicy.from_config(TrainingConfig()).period_words is None


@pytest.fixture
def corpus():
    gen = np.random.default_rng(4)
    words = [f"w{i}" for i in range(30)]
    lines = [" ".join(gen.choice(words, size=int(gen.integers(3, 12)))) for _ in range(200)]
    return corpus_from_text("\n".join(lines) + "\n", min_count=1)


def cfg(**kw):
    base = dict(dim=8, negative=3, window=3, sample=0.0, min_count=1, iterations=3, threads=1,
                table_size=2000, trainer="hogbatch", seed=5)
    base.update(kw)
    return TrainingConfig(**base)


@pytest.mark.parametrize("sync", [None, SyncPolicy(period_words=300), SyncPolicy(at_epoch_end=True)])
def test_single_worker_matches_plain_run(corpus, sync):
    c = cfg()
    plain = init_model(len(corpus.vocab), c.dim, Rng(c.seed))
    run_hogbatch(plain, corpus, c)
    result = run_distributed(corpus, c, workers=1, sync=sync)
    assert result.model.m_in.tobytes() == plain.m_in.tobytes()
    assert result.model.m_out.tobytes() == plain.m_out.tobytes()


def test_never_sync_is_average_of_independent_runs(corpus):
    c = cfg()
    W = 3
    result = run_distributed(corpus, c, workers=W, sync=SyncPolicy())
    assert len(result.rounds) == 1
    start = init_model(len(corpus.vocab), c.dim, Rng(c.seed))
    table = table_for(corpus, c)
    finals = []
    for w, (lo, hi) in enumerate(corpus.partition(W)):
        m = start.copy()
        Trainer(c.trainer, m, corpus.slice(lo, hi), c, table, seed_offset=w).run()
        finals.append(m)
    expected = np.mean(np.stack([m.m_in for m in finals]).astype(np.float64), axis=0)
    np.testing.assert_allclose(result.model.m_in, expected, rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_total_words_independent_of_workers(corpus, workers):
    c = cfg(iterations=2)
    result = run_distributed(corpus, c, workers=workers, sync=SyncPolicy(period_words=400))
    report = result.combined_report()
    assert report.words_processed == 2 * corpus.n_words
    assert sum(sum(r["words"]) for r in result.rounds) == 2 * corpus.n_words
    assert result.model.is_finite()


def test_periodic_rounds_respect_period(corpus):
    c = cfg(iterations=2)
    period = 300
    result = run_distributed(corpus, c, workers=2, sync=SyncPolicy(period_words=period))
    assert len(result.rounds) > 2
    longest = max(int(np.diff(corpus.sentence_starts).max()), 1)
    for r in result.rounds:
        assert all(w < period + longest for w in r["words"])
    stamps = [r["timestamp"] for r in result.rounds]
    assert stamps == sorted(stamps)


def test_epoch_barriers(corpus):
    c = cfg(iterations=3)
    result = run_distributed(corpus, c, workers=2, sync=SyncPolicy(at_epoch_end=True))
    assert len(result.rounds) >= 3
    per_round = [sum(r["words"]) for r in result.rounds if sum(r["words"])]
    assert per_round[:3] == [corpus.n_words] * 3


def test_replicas_agree_after_run(corpus):
    result = run_distributed(corpus, cfg(trainer="hogwild"), workers=3, sync=SyncPolicy(period_words=500))
    assert result.combined_report().trainer == "hogwild"
    assert result.combined_report().sync_rounds == result.rounds


def test_distributed_deterministic(corpus):
    a = run_distributed(corpus, cfg(), workers=4, sync=SyncPolicy(period_words=250))
    b = run_distributed(corpus, cfg(), workers=4, sync=SyncPolicy(period_words=250))
    assert a.model.m_in.tobytes() == b.model.m_in.tobytes()


def test_rejects_zero_workers(corpus):
    with pytest.raises(ValueError):
        run_distributed(corpus, cfg(), workers=0)
