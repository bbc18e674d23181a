"""Hot numeric kernels: LSTM cell, collapsed Gibbs sampling, PV-DM updates.

Each kernel is written in a loop style that numba can compile; the module
applies :func:`textppm.accel.jit_kernel` at the bottom, so the same source
also runs un-jitted (see TEXTPPM_NUMBA in :mod:`textppm.accel`). Heavy inner
products go through ``np.dot`` in both modes. All state-changing kernels take
pre-drawn uniforms instead of calling an RNG, which keeps runs reproducible
and both execution paths on the same random stream.
"""

import numpy as np

from .accel import jit_kernel


# ---------------------------------------------------------------------------
# LSTM layer
# ---------------------------------------------------------------------------

def _lstm_layer_forward(x, wx, wh, b):
    # x (B,T,D); wx (D,4H); wh (H,4H); b (4H,). Gate order: input, forget,
    # candidate, output. Returns hidden/cell sequences and post-activation
    # gate values needed by the backward pass.
    B, T, _ = x.shape
    H = wh.shape[0]
    hs = np.zeros((B, T, H))
    cs = np.zeros((B, T, H))
    gi = np.zeros((B, T, H))
    gf = np.zeros((B, T, H))
    gg = np.zeros((B, T, H))
    go = np.zeros((B, T, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        xt = np.ascontiguousarray(x[:, t, :])
        z = np.dot(xt, wx) + np.dot(h, wh) + b
        i = 1.0 / (1.0 + np.exp(-z[:, 0:H]))
        f = 1.0 / (1.0 + np.exp(-z[:, H:2 * H]))
        g = np.tanh(z[:, 2 * H:3 * H])
        o = 1.0 / (1.0 + np.exp(-z[:, 3 * H:4 * H]))
        c = f * c + i * g
        h = o * np.tanh(c)
        hs[:, t, :] = h
        cs[:, t, :] = c
        gi[:, t, :] = i
        gf[:, t, :] = f
        gg[:, t, :] = g
        go[:, t, :] = o
    return hs, cs, gi, gf, gg, go


def _lstm_layer_backward(x, hs, cs, gi, gf, gg, go, wx, wh, dh_seq):
    # dh_seq (B,T,H): upstream gradient flowing into h at every step (zeros
    # where unused). Returns dx plus parameter gradients.
    B, T, D = x.shape
    H = wh.shape[0]
    dx = np.zeros((B, T, D))
    dwx = np.zeros((D, 4 * H))
    dwh = np.zeros((H, 4 * H))
    db = np.zeros(4 * H)
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    dz = np.zeros((B, 4 * H))
    for t in range(T - 1, -1, -1):
        dh_t = dh + dh_seq[:, t, :]
        i = gi[:, t, :]
        f = gf[:, t, :]
        g = gg[:, t, :]
        o = go[:, t, :]
        c = cs[:, t, :]
        tc = np.tanh(c)
        do = dh_t * tc
        dct = dc + dh_t * o * (1.0 - tc * tc)
        if t > 0:
            c_prev = cs[:, t - 1, :]
            h_prev = np.ascontiguousarray(hs[:, t - 1, :])
        else:
            c_prev = np.zeros((B, H))
            h_prev = np.zeros((B, H))
        di = dct * g
        df = dct * c_prev
        dg = dct * i
        dz[:, 0:H] = di * i * (1.0 - i)
        dz[:, H:2 * H] = df * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dg * (1.0 - g * g)
        dz[:, 3 * H:4 * H] = do * o * (1.0 - o)
        xt = np.ascontiguousarray(x[:, t, :])
        dwx += np.dot(xt.T, dz)
        dwh += np.dot(h_prev.T, dz)
        db += np.sum(dz, 0)
        dx[:, t, :] = np.dot(dz, wx.T)
        dh = np.dot(dz, wh.T)
        dc = dct * f
    return dx, dwx, dwh, db


# ---------------------------------------------------------------------------
# LDA collapsed Gibbs sampling
# ---------------------------------------------------------------------------

def _lda_init_assign(doc_ids, word_ids, n_dk, n_wk, n_k, uniforms):
    # Random topic per token from pre-drawn uniforms; fills count tables.
    n = doc_ids.shape[0]
    K = n_k.shape[0]
    z = np.empty(n, np.int64)
    for idx in range(n):
        k = int(uniforms[idx] * K)
        if k == K:  # u == 1.0 edge
            k = K - 1
        z[idx] = k
        n_dk[doc_ids[idx], k] += 1
        n_wk[word_ids[idx], k] += 1
        n_k[k] += 1
    return z


def _lda_gibbs_sweep(doc_ids, word_ids, z, n_dk, n_wk, n_k, alpha, beta, uniforms):
    # One full sweep; counts and assignments updated in place.
    n = doc_ids.shape[0]
    K = n_k.shape[0]
    V = n_wk.shape[0]
    vbeta = V * beta
    p = np.empty(K)
    for idx in range(n):
        d = doc_ids[idx]
        w = word_ids[idx]
        k_old = z[idx]
        n_dk[d, k_old] -= 1
        n_wk[w, k_old] -= 1
        n_k[k_old] -= 1
        total = 0.0
        for k in range(K):
            total += (n_dk[d, k] + alpha) * (n_wk[w, k] + beta) / (n_k[k] + vbeta)
            p[k] = total
        u = uniforms[idx] * total
        k_new = K - 1
        for k in range(K):
            if u < p[k]:
                k_new = k
                break
        z[idx] = k_new
        n_dk[d, k_new] += 1
        n_wk[w, k_new] += 1
        n_k[k_new] += 1


def _lda_infer_doc(word_ids, phi, alpha, init_uniforms, sweep_uniforms):
    # Gibbs inference for one document against frozen topic-word weights phi
    # (V,K). Returns the final per-topic assignment counts.
    n = word_ids.shape[0]
    K = phi.shape[1]
    m_k = np.zeros(K, np.int64)
    z = np.empty(n, np.int64)
    for idx in range(n):
        k = int(init_uniforms[idx] * K)
        if k == K:
            k = K - 1
        z[idx] = k
        m_k[k] += 1
    iters = sweep_uniforms.shape[0]
    p = np.empty(K)
    for it in range(iters):
        for idx in range(n):
            w = word_ids[idx]
            k_old = z[idx]
            m_k[k_old] -= 1
            total = 0.0
            for k in range(K):
                total += (m_k[k] + alpha) * phi[w, k]
                p[k] = total
            u = sweep_uniforms[it, idx] * total
            k_new = K - 1
            for k in range(K):
                if u < p[k]:
                    k_new = k
                    break
            z[idx] = k_new
            m_k[k_new] += 1
    return m_k


# ---------------------------------------------------------------------------
# Paragraph-vector (PV-DM) updates, full softmax
# ---------------------------------------------------------------------------

def _pv_train_positions(tokens, pos_doc, doc_bounds, order, w_words, w_docs,
                        w_out, window, lr0, lr_min, step_offset, total_steps):
    # One pass over `order` (token positions acting as centers). The hidden
    # state averages the document vector with the context word vectors; the
    # full-softmax output predicts the center word. SGD updates in place.
    # Returns the mean cross-entropy over the pass.
    S = w_docs.shape[1]
    n_pos = order.shape[0]
    ce_sum = 0.0
    for j in range(n_pos):
        step = step_offset + j
        frac = step / total_steps
        lr = lr0 + (lr_min - lr0) * frac
        pos = order[j]
        d = pos_doc[pos]
        lo = doc_bounds[d]
        hi = doc_bounds[d + 1]
        center = tokens[pos]

        h = w_docs[d].copy()
        count = 1
        c_lo = pos - window
        if c_lo < lo:
            c_lo = lo
        c_hi = pos + window + 1
        if c_hi > hi:
            c_hi = hi
        for q in range(c_lo, c_hi):
            if q == pos:
                continue
            h += w_words[tokens[q]]
            count += 1
        h /= count

        logits = np.dot(h, w_out)
        m = logits.max()
        e = np.exp(logits - m)
        tot = e.sum()
        probs = e / tot
        ce_sum += -np.log(probs[center])

        grad = probs
        grad[center] -= 1.0

        dh = np.dot(w_out, grad)
        for s in range(S):
            w_out[s] -= (lr * h[s]) * grad
        scale = lr / count
        w_docs[d] -= scale * dh
        for q in range(c_lo, c_hi):
            if q == pos:
                continue
            w_words[tokens[q]] -= scale * dh
    if n_pos == 0:
        return 0.0
    return ce_sum / n_pos


def _pv_infer_doc(tokens, dvec, w_words, w_out, window, epochs, lr0, lr_min):
    # Like training, but only the document vector moves; word and output
    # matrices stay frozen. Positions are visited in natural order.
    n = tokens.shape[0]
    total_steps = epochs * n
    step = 0
    for _ in range(epochs):
        for pos in range(n):
            frac = step / total_steps
            lr = lr0 + (lr_min - lr0) * frac
            step += 1
            center = tokens[pos]
            h = dvec.copy()
            count = 1
            c_lo = pos - window
            if c_lo < 0:
                c_lo = 0
            c_hi = pos + window + 1
            if c_hi > n:
                c_hi = n
            for q in range(c_lo, c_hi):
                if q == pos:
                    continue
                h += w_words[tokens[q]]
                count += 1
            h /= count
            logits = np.dot(h, w_out)
            m = logits.max()
            e = np.exp(logits - m)
            probs = e / e.sum()
            grad = probs
            grad[center] -= 1.0
            dh = np.dot(w_out, grad)
            dvec -= (lr / count) * dh


lstm_layer_forward = jit_kernel(_lstm_layer_forward)
lstm_layer_backward = jit_kernel(_lstm_layer_backward)
lda_init_assign = jit_kernel(_lda_init_assign)
lda_gibbs_sweep = jit_kernel(_lda_gibbs_sweep)
lda_infer_doc = jit_kernel(_lda_infer_doc)
pv_train_positions = jit_kernel(_pv_train_positions)
pv_infer_doc = jit_kernel(_pv_infer_doc)

ALL_KERNELS = {
    "lstm_layer_forward": lstm_layer_forward,
    "lstm_layer_backward": lstm_layer_backward,
    "lda_init_assign": lda_init_assign,
    "lda_gibbs_sweep": lda_gibbs_sweep,
    "lda_infer_doc": lda_infer_doc,
    "pv_train_positions": pv_train_positions,
    "pv_infer_doc": pv_infer_doc,
}
