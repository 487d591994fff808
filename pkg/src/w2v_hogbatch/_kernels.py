"""Compiled inner loops shared by both trainers.

Everything here is ``nogil`` so that Python threads calling into it run
truly concurrently on the shared model arrays (Hogwild). Scalar arithmetic
is done in float64; the model dtype only affects storage. No fastmath: the
naive GEMM path must keep a fixed summation order so that the batched
trainer can be compared bit-for-bit with the scalar one.
"""

import numba as nb
import numpy as np

LCG_MULT = np.uint64(25214903917)
LCG_INC = np.uint64(11)
MAX_EXP = 6.0
EXP_TABLE_SIZE = 1000

SIGMOID_EXACT = 0
SIGMOID_TABLE = 1

MODE_HOGWILD = 0
MODE_HOGBATCH = 1

# stats slots
ST_WORDS = 0
ST_DOTS = 1
ST_ROW_WRITES = 2
ST_GEMM = 3
ST_POSITIONS = 4
N_STATS = 5

_jit = nb.njit(nogil=True, cache=True)


def make_sigmoid_table():
    x = np.linspace(-MAX_EXP, MAX_EXP, EXP_TABLE_SIZE + 1)
    return 1.0 / (1.0 + np.exp(-x))


SIGMOID_TABLE_VALUES = make_sigmoid_table()


@_jit
def lcg_next(rng):
    rng[0] = rng[0] * LCG_MULT + LCG_INC
    return rng[0]


@_jit
def sigmoid(x, mode, table):
    if mode == SIGMOID_EXACT:
        return 1.0 / (1.0 + np.exp(-x))
    if x < -MAX_EXP:
        return 0.0
    if x > MAX_EXP:
        return 1.0
    pos = (x + MAX_EXP) * (EXP_TABLE_SIZE / (2.0 * MAX_EXP))
    i = int(pos)
    if i >= EXP_TABLE_SIZE:
        i = EXP_TABLE_SIZE - 1
    frac = pos - i
    return table[i] + frac * (table[i + 1] - table[i])


@_jit
def error_term(label, inn, mode, table):
    if mode == SIGMOID_TABLE and (inn > MAX_EXP or inn < -MAX_EXP):
        return 0.0
    return label - sigmoid(inn, mode, table)


@_jit
def draw_negative(table, rng, exclude, vocab_size, allow_target):
    n = np.uint64(table.shape[0])
    for _ in range(100):
        s = lcg_next(rng)
        w = table[(s >> np.uint64(16)) % n]
        if allow_target or w != exclude:
            return w
    return (exclude + 1) % vocab_size


@_jit
def draw_negatives(table, rng, exclude, vocab_size, allow_target, out):
    for i in range(out.shape[0]):
        out[i] = draw_negative(table, rng, exclude, vocab_size, allow_target)


@_jit
def dynamic_window(max_window, rng):
    s = lcg_next(rng)
    return max_window - np.int64(s % np.uint64(max_window))


@_jit
def keep_word(keep_prob, rng):
    s = lcg_next(rng)
    return keep_prob >= (s & np.uint64(0xFFFF)) / 65536.0


@_jit
def hogwild_input(m_in, m_out, w_in, target, negative, alpha, neg_table, rng, sig_mode, sig_table,
                  allow_target, temp, stats):
    """One iteration of the outer loop over input words, in pseudocode order."""
    dim = m_in.shape[1]
    vocab_size = m_in.shape[0]
    for j in range(dim):
        temp[j] = 0.0
    for k in range(negative + 1):
        if k == 0:
            t = target
            label = 1.0
        else:
            t = draw_negative(neg_table, rng, target, vocab_size, allow_target)
            label = 0.0
        inn = 0.0
        for j in range(dim):
            inn += np.float64(m_in[w_in, j]) * m_out[t, j]  # f32*f32 would round the product
        err = error_term(label, inn, sig_mode, sig_table)
        for j in range(dim):
            temp[j] += err * m_out[t, j]
        g = alpha * err
        for j in range(dim):
            m_out[t, j] += g * m_in[w_in, j]
        stats[ST_DOTS] += 1
        stats[ST_ROW_WRITES] += 1
    for j in range(dim):
        m_in[w_in, j] += alpha * temp[j]
    stats[ST_ROW_WRITES] += 1


@_jit
def gather(src, ids, n, dst):
    for i in range(n):
        r = ids[i]
        for d in range(src.shape[1]):
            dst[i, d] = src[r, d]


@_jit
def gemm_abt(A, B, C, n, m, use_blas):
    """C[:n, :m] = A[:n] @ B[:m].T"""
    if use_blas:
        C[:n, :m] = np.dot(A[:n], B[:m].T)
        return
    dim = A.shape[1]
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for d in range(dim):
                acc += A[i, d] * B[j, d]
            C[i, j] = acc


@_jit
def batch_errors(C, E, n, m, labels, in_group, out_group, sig_mode, sig_table):
    for i in range(n):
        for j in range(m):
            if in_group[i] != out_group[j]:
                E[i, j] = 0.0
            else:
                E[i, j] = error_term(labels[j], C[i, j], sig_mode, sig_table)


@_jit
def grad_in(E, B, G, n, m, alpha, use_blas):
    """G[:n] = alpha * E[:n, :m] @ B[:m]"""
    if use_blas:
        G[:n] = alpha * np.dot(np.ascontiguousarray(E[:n, :m]), B[:m])
        return
    dim = B.shape[1]
    for i in range(n):
        for d in range(dim):
            acc = 0.0
            for j in range(m):
                acc += E[i, j] * B[j, d]
            G[i, d] = alpha * acc


@_jit
def grad_out(E, A, G, n, m, alpha, use_blas):
    """G[:m] = (alpha * E[:n, :m]).T @ A[:n]"""
    if use_blas:
        G[:m] = np.dot(np.ascontiguousarray((alpha * E[:n, :m]).T), A[:n])
        return
    dim = A.shape[1]
    for j in range(m):
        for d in range(dim):
            acc = (alpha * E[0, j]) * A[0, d]
            for i in range(1, n):
                acc += (alpha * E[i, j]) * A[i, d]
            G[j, d] = acc


@_jit
def scatter_add(dst, ids, n, G):
    for i in range(n):
        r = ids[i]
        for d in range(dst.shape[1]):
            dst[r, d] += G[i, d]


@_jit
def hogbatch_step(m_in, m_out, in_ids, in_group, n, out_ids, out_group, labels, m, alpha,
                  A, B, C, E, Gin, Gout, use_blas, sig_mode, sig_table, stats):
    """Gather, three GEMMs, then the unsynchronized scatter-add writeback."""
    gather(m_in, in_ids, n, A)
    gather(m_out, out_ids, m, B)
    gemm_abt(A, B, C, n, m, use_blas)
    batch_errors(C, E, n, m, labels, in_group, out_group, sig_mode, sig_table)
    grad_in(E, B, Gin, n, m, alpha, use_blas)
    grad_out(E, A, Gout, n, m, alpha, use_blas)
    scatter_add(m_in, in_ids, n, Gin)
    scatter_add(m_out, out_ids, m, Gout)
    stats[ST_DOTS] += n * m
    stats[ST_GEMM] += 3
    stats[ST_ROW_WRITES] += n + m


@_jit
def current_alpha(alpha0, done, words_total, floor_fraction):
    frac = 1.0 - done / (words_total + 1.0)
    if frac < floor_fraction:
        frac = floor_fraction
    return alpha0 * frac


@_jit
def train_range(mode, m_in, m_out, ids, starts, lo, hi, budget,
                keep_probs, use_sample, neg_table, window, negative, batch_windows,
                use_blas, sig_mode, sig_table, allow_target,
                rng, tstate, alpha_state, progress, tid, alpha0, words_total, floor_fraction,
                update_every, stats):
    """Train on sentences [lo, hi) until ``budget`` words have been consumed.

    Returns the index of the next unprocessed sentence. All per-thread
    state (rng, words since the last learning-rate refresh, alpha) lives in
    the passed arrays so a range can be processed in several calls with
    results identical to a single call.
    """
    dim = m_in.shape[1]
    vocab_size = m_in.shape[0]
    max_len = 0
    for s in range(lo, hi):
        ln = starts[s + 1] - starts[s]
        if ln > max_len:
            max_len = ln
    sent = np.empty(max_len + 1, dtype=np.int64)
    temp = np.empty(dim, dtype=np.float64)
    max_in = 2 * window * batch_windows
    max_out = (negative + 1) * batch_windows
    in_ids = np.empty(max_in, dtype=np.int64)
    in_group = np.empty(max_in, dtype=np.int64)
    out_ids = np.empty(max_out, dtype=np.int64)
    out_group = np.empty(max_out, dtype=np.int64)
    labels = np.empty(max_out, dtype=np.float64)
    A = np.empty((max_in, dim), dtype=np.float64)
    B = np.empty((max_out, dim), dtype=np.float64)
    C = np.empty((max_in, max_out), dtype=np.float64)
    E = np.empty((max_in, max_out), dtype=np.float64)
    Gin = np.empty((max_in, dim), dtype=np.float64)
    Gout = np.empty((max_out, dim), dtype=np.float64)

    consumed = 0
    s = lo
    while s < hi:
        if consumed >= budget:
            break
        if tstate[0] > update_every:
            progress[tid] += tstate[0]
            tstate[0] = 0
            alpha_state[0] = current_alpha(alpha0, progress.sum(), words_total, floor_fraction)
        alpha = alpha_state[0]
        begin = starts[s]
        length = starts[s + 1] - begin
        n_kept = 0
        for p in range(length):
            w = ids[begin + p]
            if use_sample and not keep_word(keep_probs[w], rng):
                continue
            sent[n_kept] = w
            n_kept += 1
        consumed += length
        tstate[0] += length
        stats[ST_WORDS] += length

        n_in = 0
        n_out = 0
        groups = 0
        for p in range(n_kept):
            b = dynamic_window(window, rng)
            target = sent[p]
            stats[ST_POSITIONS] += 1
            c_lo = p - b
            if c_lo < 0:
                c_lo = 0
            c_hi = p + b
            if c_hi > n_kept - 1:
                c_hi = n_kept - 1
            if mode == MODE_HOGWILD:
                for c in range(c_lo, c_hi + 1):
                    if c != p:
                        hogwild_input(m_in, m_out, sent[c], target, negative, alpha, neg_table, rng,
                                      sig_mode, sig_table, allow_target, temp, stats)
                continue
            if c_hi - c_lo < 1:
                continue  # no context survived: empty batch
            for c in range(c_lo, c_hi + 1):
                if c != p:
                    in_ids[n_in] = sent[c]
                    in_group[n_in] = groups
                    n_in += 1
            out_ids[n_out] = target
            out_group[n_out] = groups
            labels[n_out] = 1.0
            n_out += 1
            for k in range(negative):
                out_ids[n_out] = draw_negative(neg_table, rng, target, vocab_size, allow_target)
                out_group[n_out] = groups
                labels[n_out] = 0.0
                n_out += 1
            groups += 1
            if groups == batch_windows:
                hogbatch_step(m_in, m_out, in_ids, in_group, n_in, out_ids, out_group, labels, n_out,
                              alpha, A, B, C, E, Gin, Gout, use_blas, sig_mode, sig_table, stats)
                n_in = 0
                n_out = 0
                groups = 0
        if groups > 0:
            hogbatch_step(m_in, m_out, in_ids, in_group, n_in, out_ids, out_group, labels, n_out,
                          alpha, A, B, C, E, Gin, Gout, use_blas, sig_mode, sig_table, stats)
        s += 1
    return s
