"""Act-slot encoder: z_t = [m_t; e_t], a 1-layer bi-LSTM, context pooling and d_0.

LSTM gate blocks are stacked as ``[input, forget, output, candidate]`` along
the rows of ``W_x`` (4H x I), ``W_h`` (4H x H) and ``b`` (1 x 4H).
"""

import logging

import numpy as np

from ldsclstm.corpus import UNK_ID
from ldsclstm.errors import ShapeMismatch, UnknownActSlot
from ldsclstm.numerics import DTYPE, sigmoid

log = logging.getLogger(__name__)


def encode_slot_value(pair, inventory, embeddings, vocab=None, lexical=True):
    """Return ``(m, e, z)`` for one dialogue act.

    ``embeddings`` is the V x E table; value tokens are looked up through
    ``vocab`` (words outside it use the unk row). Empty values give e = 0.
    """
    if pair.key not in inventory:
        raise UnknownActSlot(pair.act, pair.slot)
    m = np.zeros(inventory.D, dtype=DTYPE)
    m[inventory.index(pair.act, pair.slot)] = 1.0
    e = np.zeros(embeddings.shape[1], dtype=DTYPE)
    if lexical and pair.value:
        ids = [vocab.index(t) if vocab is not None else UNK_ID for t in pair.value]
        e = embeddings[ids].mean(axis=0)
    return m, e, np.concatenate([m, e])


def init_act_vector(mr, inventory):
    """Binary d_0: 1 at every act-slot coordinate present in ``mr``."""
    d0 = np.zeros(inventory.D, dtype=DTYPE)
    for act in mr.acts:
        d0[inventory.index(act.act, act.slot)] = 1.0
    if not mr.acts:
        log.warning("empty meaning representation gives a degenerate zero act vector")
    return d0


def lstm_forward(X, W_x, W_h, b, h0=None, c0=None):
    """Run an LSTM over ``X`` (B x T x I) from zero (or given) state.

    Returns hidden states (B x T x H) and a cache for ``lstm_backward``.
    """
    B, T, I = X.shape
    H = W_h.shape[1]
    if W_x.shape != (4 * H, I) or W_h.shape != (4 * H, H) or b.shape != (1, 4 * H):
        raise ShapeMismatch(f"LSTM weights {W_x.shape}, {W_h.shape}, {b.shape} for input {I}")
    h = np.zeros((B, H), dtype=DTYPE) if h0 is None else h0
    c = np.zeros((B, H), dtype=DTYPE) if c0 is None else c0
    pre_x = X @ W_x.T + b
    hs = np.empty((B, T, H), dtype=DTYPE)
    cache = []
    for t in range(T):
        a = pre_x[:, t] + h @ W_h.T
        i = sigmoid(a[:, :H])
        f = sigmoid(a[:, H:2 * H])
        o = sigmoid(a[:, 2 * H:3 * H])
        g = np.tanh(a[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        cache.append((h, c, i, f, o, g, tc))
        h, c = h_new, c_new
        hs[:, t] = h
    return hs, (X, W_x, W_h, cache)


def lstm_backward(dhs, lstm_cache, dh_last=None, dc_last=None):
    """Backpropagate ``dhs`` (B x T x H) through an ``lstm_forward`` run.

    Returns ``dX, dW_x, dW_h, db, dh0, dc0``.
    """
    X, W_x, W_h, cache = lstm_cache
    B, T, H = dhs.shape
    dW_h = np.zeros_like(W_h)
    da_all = np.empty((B, T, 4 * H), dtype=DTYPE)
    dh_next = np.zeros((B, H), dtype=DTYPE) if dh_last is None else dh_last.copy()
    dc_next = np.zeros((B, H), dtype=DTYPE) if dc_last is None else dc_last.copy()
    for t in reversed(range(T)):
        h_prev, c_prev, i, f, o, g, tc = cache[t]
        dh = dhs[:, t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        da = np.concatenate([di * i * (1.0 - i), df * f * (1.0 - f),
                             do * o * (1.0 - o), dg * (1.0 - g * g)], axis=1)
        da_all[:, t] = da
        dW_h += da.T @ h_prev
        dh_next = da @ W_h
        dc_next = dc * f
    flat_da = da_all.reshape(B * T, 4 * H)
    dX = (flat_da @ W_x).reshape(X.shape)
    dW_x = flat_da.T @ X.reshape(B * T, -1)
    db = flat_da.sum(axis=0, keepdims=True)
    return dX, dW_x, dW_h, db, dh_next, dc_next


def bilstm_encode(Z, fwd, bwd):
    """Encode one sequence ``Z`` (M x I) with forward/backward weight triples.

    Returns ``(forward_states, backward_states)``, each M x H, the backward
    states indexed by original position.
    """
    Z = np.asarray(Z, dtype=DTYPE)
    hf, _ = lstm_forward(Z[None], *fwd)
    hb, _ = lstm_forward(Z[None, ::-1], *bwd)
    return hf[0], hb[0, ::-1]


def pool_context(forward_states, backward_states):
    """x = [mean_t h_fwd_t ; mean_t h_bwd_t]."""
    forward_states = np.asarray(forward_states)
    backward_states = np.asarray(backward_states)
    if len(forward_states) != len(backward_states):
        raise ShapeMismatch("forward and backward state sequences differ in length")
    return np.concatenate([forward_states.mean(axis=0), backward_states.mean(axis=0)])


class EncoderBatch:
    """Padded encoder inputs for a batch of meaning representations."""

    def __init__(self, mrs, inventory, vocab, max_acts=None):
        self.B = len(mrs)
        self.lengths = np.array([len(mr) for mr in mrs])
        if np.any(self.lengths < 1):
            raise ShapeMismatch("every meaning representation needs at least one act")
        if max_acts is not None and self.lengths.max() > max_acts:
            raise ShapeMismatch(f"meaning representation longer than {max_acts} acts")
        self.M = int(self.lengths.max())
        self.D = inventory.D
        self.slot_idx = np.zeros((self.B, self.M), dtype=np.int64)
        # value token ids per (example, step); empty list for empty values
        self.value_ids = []
        for b, mr in enumerate(mrs):
            row = []
            for t, act in enumerate(mr.acts):
                self.slot_idx[b, t] = inventory.index(act.act, act.slot)
                row.append(vocab.encode(act.value))
            self.value_ids.append(row)
        self.d0 = np.zeros((self.B, self.D), dtype=DTYPE)
        for b in range(self.B):
            self.d0[b, self.slot_idx[b, :self.lengths[b]]] = 1.0


def encoder_forward(params, batch, lexical=True, e_mask=None):
    """Batched bi-LSTM encoding; returns context x (B x 2H_enc) and a cache.

    ``e_mask`` (B x M x E), if given, is a dropout mask applied to e_t.
    """
    emb = params["emb"].value
    E = emb.shape[1]
    B, M, D = batch.B, batch.M, batch.D
    Z = np.zeros((B, M, D + E), dtype=DTYPE)
    for b in range(B):
        n = batch.lengths[b]
        Z[b, np.arange(n), batch.slot_idx[b, :n]] = 1.0
        if lexical:
            for t in range(n):
                ids = batch.value_ids[b][t]
                if ids:
                    Z[b, t, D:] = emb[ids].mean(axis=0)
    if e_mask is not None:
        Z[:, :, D:] *= e_mask
    # backward direction: reverse each example's valid prefix, pad at the end
    rev = np.zeros_like(Z)
    for b in range(B):
        n = batch.lengths[b]
        rev[b, :n] = Z[b, n - 1::-1] if n > 0 else Z[b, :0]
    fwd = tuple(params[f"enc.fwd.{k}"].value for k in ("W_x", "W_h", "b"))
    bwd = tuple(params[f"enc.bwd.{k}"].value for k in ("W_x", "W_h", "b"))
    hf, cache_f = lstm_forward(Z, *fwd)
    hb, cache_b = lstm_forward(rev, *bwd)
    valid = (np.arange(M)[None, :] < batch.lengths[:, None]).astype(DTYPE)
    weights = valid / batch.lengths[:, None]
    x = np.concatenate([np.einsum("bt,bth->bh", weights, hf),
                        np.einsum("bt,bth->bh", weights, hb)], axis=1)
    return x, (Z, cache_f, cache_b, weights, lexical, e_mask)


def encoder_backward(params, batch, cache, dx):
    """Accumulate gradients of the pooled context ``dx`` into encoder params and embeddings."""
    Z, cache_f, cache_b, weights, lexical, e_mask = cache
    H = dx.shape[1] // 2
    dhf = weights[:, :, None] * dx[:, None, :H]
    dhb = weights[:, :, None] * dx[:, None, H:]
    dZ, dWx, dWh, db, _, _ = lstm_backward(dhf, cache_f)
    params["enc.fwd.W_x"].grad += dWx
    params["enc.fwd.W_h"].grad += dWh
    params["enc.fwd.b"].grad += db
    dRev, dWx, dWh, db, _, _ = lstm_backward(dhb, cache_b)
    params["enc.bwd.W_x"].grad += dWx
    params["enc.bwd.W_h"].grad += dWh
    params["enc.bwd.b"].grad += db
    if not lexical:
        return
    D = batch.D
    for b in range(batch.B):
        n = batch.lengths[b]
        dZ[b, :n] += dRev[b, n - 1::-1]
    dE = dZ[:, :, D:]
    if e_mask is not None:
        dE = dE * e_mask
    emb_grad = params["emb"].grad
    for b in range(batch.B):
        for t in range(batch.lengths[b]):
            ids = batch.value_ids[b][t]
            if ids:
                np.add.at(emb_grad, ids, dE[b, t] / len(ids))
