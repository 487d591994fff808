import math

import numpy as np
import pytest

import oracles
from conftest import fixed_table
from w2v_hogbatch.config import TrainingConfig
from w2v_hogbatch.corpus import EncodedCorpus, Vocabulary
from w2v_hogbatch.hogwild import WindowTask, run_hogwild, train_window_hogwild
from w2v_hogbatch.model import EmbeddingModel, init_model
from w2v_hogbatch.sampling import Rng, build_unigram_table, sample_negatives


def d1_model(dtype=np.float64):
    m_in = np.array([[0.5], [0.0], [0.0]], dtype=dtype)
    m_out = np.array([[0.0], [0.4], [-0.2]], dtype=dtype)
    return EmbeddingModel(m_in, m_out)


def test_hand_example_d1():
    m = d1_model()
    stats = train_window_hogwild(m, WindowTask(1, (0,)), 1, 0.1, fixed_table([2], 3), Rng(1))
    # values from the scalar oracle: err_pos = 0.450166, err_neg = -0.475021
    assert m.m_in[0, 0] == pytest.approx(0.527507056357922, abs=1e-9)
    assert m.m_out[1, 0] == pytest.approx(0.4225083001343761, abs=1e-9)
    assert m.m_out[2, 0] == pytest.approx(-0.223751040626053, abs=1e-9)
    assert stats.dot_products == 2 and stats.rows_written == 3


def test_zero_input_row():
    m = EmbeddingModel(np.zeros((3, 2)), np.array([[0.0, 0.0], [0.3, -0.1], [0.2, 0.5]]))
    out_before = m.m_out.copy()
    train_window_hogwild(m, WindowTask(1, (0,)), 1, 0.1, fixed_table([2], 3), Rng(1))
    np.testing.assert_array_equal(m.m_out, out_before)
    expected = 0.1 * (0.5 * out_before[1] - 0.5 * out_before[2])
    np.testing.assert_allclose(m.m_in[0], expected, atol=1e-15)


def test_k0_is_logistic_regression_step():
    m = EmbeddingModel(np.array([[0.3, -0.2], [0.0, 0.0]]), np.array([[0.0, 0.0], [0.1, 0.4]]))
    a, b = m.m_in[0].copy(), m.m_out[1].copy()
    train_window_hogwild(m, WindowTask(1, (0,)), 0, 0.5, fixed_table([0], 2), Rng(1))
    err = 1 - 1 / (1 + math.exp(-(a @ b)))
    np.testing.assert_allclose(m.m_in[0], a + 0.5 * err * b, rtol=1e-15)
    np.testing.assert_allclose(m.m_out[1], b + 0.5 * err * a, rtol=1e-15)


def random_instance(rng, max_v=50, max_d=8, max_k=10, max_n=6):
    V = int(rng.integers(3, max_v + 1))
    D = int(rng.integers(1, max_d + 1))
    K = int(rng.integers(0, max_k + 1))
    N = int(rng.integers(1, max_n + 1))
    m_in = rng.uniform(-1, 1, (V, D))
    m_out = rng.uniform(-1, 1, (V, D))
    counts = rng.integers(1, 100, V)
    table = build_unigram_table(counts, 0.75, 1000)
    target = int(rng.integers(0, V))
    inputs = tuple(int(x) for x in rng.integers(0, V, N))
    return m_in, m_out, table, target, inputs, K


def replay_negatives(table, seed, target, n_inputs, k):
    rng = Rng(seed)
    return [sample_negatives(table, rng, target, k).tolist() for _ in range(n_inputs)]


def test_matches_scalar_oracle_bit_exact_64bit():
    gen = np.random.default_rng(0)
    for trial in range(300):
        m_in, m_out, table, target, inputs, K = random_instance(gen)
        model = EmbeddingModel(m_in.copy(), m_out.copy())
        train_window_hogwild(model, WindowTask(target, inputs), K, 0.05, table, Rng(trial))
        negs = replay_negatives(table, trial, target, len(inputs), K)
        o_in, o_out = oracles.alg1_window(oracles.to_rows(m_in), oracles.to_rows(m_out),
                                          inputs, target, negs, 0.05)
        np.testing.assert_array_equal(model.m_in, np.array(o_in))
        np.testing.assert_array_equal(model.m_out, np.array(o_out))


def test_only_touched_rows_change():
    gen = np.random.default_rng(1)
    m_in, m_out, table, target, inputs, K = random_instance(gen, max_v=40)
    model = EmbeddingModel(m_in.copy(), m_out.copy())
    train_window_hogwild(model, WindowTask(target, inputs), K, 0.1, table, Rng(5))
    negs = {n for row in replay_negatives(table, 5, target, len(inputs), K) for n in row}
    changed_in = set(np.nonzero((model.m_in != m_in).any(axis=1))[0])
    changed_out = set(np.nonzero((model.m_out != m_out).any(axis=1))[0])
    assert changed_in <= set(inputs)
    assert changed_out <= negs | {target}


def sgns_single_loss(a, outs, labels):
    return oracles.sgns_loss([a], outs, labels)


def gradient_relative_error(gen, trial):
    """Scalar update / alpha versus central differences of the SGNS loss, one input word."""
    while True:
        m_in, m_out, table, target, _, K = random_instance(gen)
        w = int(gen.integers(0, m_in.shape[0]))
        negs = replay_negatives(table, trial, target, 1, K)[0]
        if len(set(negs)) == len(negs):  # distinct rows: update equals the exact gradient
            break
    D = m_in.shape[1]
    alpha = 1e-3
    model = EmbeddingModel(m_in.copy(), m_out.copy())
    train_window_hogwild(model, WindowTask(target, (w,)), K, alpha, table, Rng(trial))
    outputs = [target] + negs
    labels = [1.0] + [0.0] * K
    if w in outputs:
        return None
    analytic = list((model.m_in[w] - m_in[w]) / alpha)
    for o in outputs:
        analytic += list((model.m_out[o] - m_out[o]) / alpha)
    params = list(m_in[w]) + [v for o in outputs for v in m_out[o]]

    def loss(p):
        a = p[:D]
        outs = [p[D * (1 + k): D * (2 + k)] for k in range(len(outputs))]
        return sgns_single_loss(a, outs, labels)

    numeric = [-g for g in oracles.central_difference(loss, params)]
    diff = np.linalg.norm(np.subtract(analytic, numeric))
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return diff / scale


def test_gradient_matches_finite_differences():
    gen = np.random.default_rng(2)
    errors = [e for e in (gradient_relative_error(gen, t) for t in range(200)) if e is not None]
    assert len(errors) > 150
    assert max(errors) <= 1e-4


def test_repeated_task_decreases_loss():
    # V=2: the only possible negative is the other word, so the task is identical each step
    m = EmbeddingModel(np.array([[0.3, -0.2, 0.1], [0.05, 0.2, -0.4]]),
                       np.array([[0.1, 0.1, -0.3], [0.2, -0.1, 0.05]]))
    table = build_unigram_table(np.array([1, 1]), 0.75, 10)
    task = WindowTask(0, (1,))

    def loss():
        return oracles.sgns_loss([m.m_in[1]], [m.m_out[0], m.m_out[1]], [1.0, 0.0])

    losses = [loss()]
    rng = Rng(1)
    for _ in range(100):
        train_window_hogwild(m, task, 1, 0.01, table, rng)
        losses.append(loss())
    assert all(b < a for a, b in zip(losses[1:], losses[2:]))
    assert losses[-1] < losses[0]


def test_allow_target_negative_flag():
    m = d1_model()
    # table yields only the target: with the flag the target is also used as a negative
    table = fixed_table([1], 3)
    stats = train_window_hogwild(m.copy(), WindowTask(1, (0,)), 1, 0.1, table, Rng(1),
                                 allow_target_negative=True)
    assert stats.dot_products == 2
    literal = d1_model()
    train_window_hogwild(literal, WindowTask(1, (0,)), 1, 0.1, table, Rng(1), allow_target_negative=True)
    o_in, o_out = oracles.alg1_window(oracles.to_rows(d1_model().m_in), oracles.to_rows(d1_model().m_out),
                                      (0,), 1, [[1]], 0.1)
    np.testing.assert_array_equal(literal.m_in, np.array(o_in))
    np.testing.assert_array_equal(literal.m_out, np.array(o_out))


def test_table_sigmoid_skips_saturated():
    m = EmbeddingModel(np.array([[10.0], [0.0]]), np.array([[0.0], [1.0]]))
    before = m.copy()
    train_window_hogwild(m, WindowTask(1, (0,)), 0, 0.1, fixed_table([0], 2), Rng(1), sigmoid_mode="table")
    np.testing.assert_array_equal(m.m_in, before.m_in)
    np.testing.assert_array_equal(m.m_out, before.m_out)


def small_config(**kw):
    base = dict(dim=8, negative=3, window=3, sample=0.0, min_count=1, iterations=2, threads=1,
                table_size=1000, trainer="hogwild")
    base.update(kw)
    return TrainingConfig(**base)


def test_run_single_thread_deterministic(tiny_corpus):
    cfg = small_config()
    models = []
    for _ in range(2):
        m = init_model(len(tiny_corpus.vocab), cfg.dim, Rng(cfg.seed))
        report = run_hogwild(m, tiny_corpus, cfg)
        models.append(m)
    assert models[0].m_in.tobytes() == models[1].m_in.tobytes()
    assert models[0].m_out.tobytes() == models[1].m_out.tobytes()
    assert report.words_processed == 2 * tiny_corpus.n_words
    # alpha refreshes every 10k words, so a 680-word run keeps alpha0
    assert report.error is None and report.final_alpha == cfg.alpha
    assert models[0].is_finite()


def test_run_multithreaded_trains(tiny_corpus):
    cfg = small_config(threads=3, iterations=3)
    m = init_model(len(tiny_corpus.vocab), cfg.dim, Rng(cfg.seed))
    report = run_hogwild(m, tiny_corpus, cfg)
    assert report.words_processed == 3 * tiny_corpus.n_words
    assert report.threads == 3
    assert m.is_finite() and np.abs(m.m_out).sum() > 0


def test_run_empty_corpus():
    vocab = Vocabulary.from_counts([("a", 1), ("b", 1)])
    corpus = EncodedCorpus.from_sentences([], vocab)
    m = init_model(2, 4, Rng(1))
    before = m.copy()
    report = run_hogwild(m, corpus, small_config(threads=2))
    assert report.words_processed == 0
    np.testing.assert_array_equal(m.m_in, before.m_in)


def test_large_dim_hyperparameters_accepted(tiny_corpus):
    cfg = TrainingConfig(dim=300, negative=5, window=5, sample=1e-4, min_count=1, iterations=1,
                         table_size=10_000, trainer="hogwild")
    m = init_model(len(tiny_corpus.vocab), 300, Rng(1))
    report = run_hogwild(m, tiny_corpus, cfg)
    assert report.words_processed == tiny_corpus.n_words
    assert m.is_finite()


def test_report_json_keys(tiny_corpus):
    import json

    cfg = small_config()
    report = run_hogwild(init_model(len(tiny_corpus.vocab), 8, Rng(1)), tiny_corpus, cfg)
    d = json.loads(report.to_json())
    assert {"words_per_sec", "total_row_updates", "threads", "epochs"} <= d.keys()
