"""Semantically conditioned LSTM decoder: initialization, cell, loss and BPTT.

Cell, for input word embedding w and previous state (h, c, d):

    i, f, o = sigmoid(U_g w + W_g h + b_g)
    c_hat   = tanh(U_c w + W_c h + b_c)
    r       = sigmoid(W_wr w + alpha W_hr h)
    d'      = r * d
    c'      = f * c + i * c_hat + tanh(W_dc d')
    h'      = o * tanh(c')
    p       = softmax(W_out h' + b_out)

With ``conditioned=False`` the reading gate and act vector are dropped and
the cell is a plain LSTM (used by the sentence autoencoder).
"""

from dataclasses import dataclass

import numpy as np

from ldsclstm.corpus import BOS_ID
from ldsclstm.errors import SequenceTooLong, ShapeMismatch
from ldsclstm.numerics import DTYPE, log_softmax, sigmoid, softmax

GATES = ("i", "f", "o", "c")
LOG_CLAMP = np.log(1e-12)


@dataclass(frozen=True)
class LossConfig:
    eta: float = 0.0001
    xi: float = 100.0

    def __post_init__(self):
        if self.eta <= 0 or self.xi <= 1:
            raise ValueError("loss needs eta > 0 and xi > 1")


@dataclass
class DecoderState:
    h: np.ndarray
    c: np.ndarray
    d: np.ndarray


def decoder_param_shapes(V, E, H, D, H_enc, conditioned=True):
    shapes = {}
    for g in GATES:
        shapes[f"dec.W_{g}"] = (H, H)
        shapes[f"dec.U_{g}"] = (H, E)
        shapes[f"dec.b_{g}"] = (1, H)
    if conditioned:
        shapes["dec.W_wr"] = (D, E)
        shapes["dec.W_hr"] = (D, H)
        shapes["dec.W_dc"] = (H, D)
    shapes["dec.W_out"] = (V, H)
    shapes["dec.b_out"] = (1, V)
    shapes["dec.W_hx"] = (H, 2 * H_enc)
    shapes["dec.b_hx"] = (1, H)
    shapes["dec.W_cx"] = (H, 2 * H_enc)
    shapes["dec.b_cx"] = (1, H)
    return shapes


def _val(params, name):
    p = params[name]
    return p.value if hasattr(p, "value") else p


def init_state(x, d0, params):
    """h_0 = tanh(W_hx x + b_hx), c_0 = tanh(W_cx x + b_cx), d = d0 (batched rows)."""
    x = np.atleast_2d(np.asarray(x, dtype=DTYPE))
    W_hx = _val(params, "dec.W_hx")
    if x.shape[1] != W_hx.shape[1]:
        raise ShapeMismatch(f"context of size {x.shape[1]} for W_hx {W_hx.shape}")
    h = np.tanh(x @ W_hx.T + _val(params, "dec.b_hx"))
    c = np.tanh(x @ _val(params, "dec.W_cx").T + _val(params, "dec.b_cx"))
    d = None if d0 is None else np.atleast_2d(np.asarray(d0, dtype=DTYPE)).copy()
    return DecoderState(h, c, d)


class _Stacked:
    """Gate matrices stacked once per pass: rows [i; f; o; c]."""

    def __init__(self, params, alpha, conditioned):
        self.W = np.vstack([_val(params, f"dec.W_{g}") for g in GATES])
        self.U = np.vstack([_val(params, f"dec.U_{g}") for g in GATES])
        self.b = np.hstack([_val(params, f"dec.b_{g}") for g in GATES])
        self.H = self.W.shape[1]
        self.conditioned = conditioned
        self.alpha = alpha
        if conditioned:
            self.W_wr = _val(params, "dec.W_wr")
            self.W_hr = _val(params, "dec.W_hr")
            self.W_dc = _val(params, "dec.W_dc")
        if self.U.shape[0] != 4 * self.H or self.b.shape != (1, 4 * self.H):
            raise ShapeMismatch("decoder gate shapes disagree")


def _cell(k, h, c, d, w):
    H = k.H
    a = w @ k.U.T + h @ k.W.T + k.b
    i = sigmoid(a[:, :H])
    f = sigmoid(a[:, H:2 * H])
    o = sigmoid(a[:, 2 * H:3 * H])
    g = np.tanh(a[:, 3 * H:])
    c_new = f * c + i * g
    r = d_new = kd = None
    if k.conditioned:
        r = sigmoid(w @ k.W_wr.T + k.alpha * (h @ k.W_hr.T))
        d_new = r * d
        kd = np.tanh(d_new @ k.W_dc.T)
        c_new = c_new + kd
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, d_new, (i, f, o, g, r, kd, tc)


def sc_lstm_step(state, w, params, alpha=1.0, conditioned=True):
    """One decoder step (no dropout). Returns ``(p, new_state)``; works on 1-D or batched rows."""
    single = np.ndim(w) == 1
    w = np.atleast_2d(np.asarray(w, dtype=DTYPE))
    k = _Stacked(params, alpha, conditioned)
    if w.shape[1] != k.U.shape[1]:
        raise ShapeMismatch(f"word vector of size {w.shape[1]}, expected {k.U.shape[1]}")
    h, c = np.atleast_2d(state.h), np.atleast_2d(state.c)
    d = np.atleast_2d(state.d) if state.d is not None else None
    h_new, c_new, d_new, _ = _cell(k, h, c, d, w)
    p = softmax(h_new @ _val(params, "dec.W_out").T + _val(params, "dec.b_out"))
    if single:
        return p[0], DecoderState(h_new[0], c_new[0], None if d_new is None else d_new[0])
    return p, DecoderState(h_new, c_new, d_new)


def step_logprobs(state, token_ids, params, alpha=1.0, conditioned=True):
    """Batched inference step from token ids; returns ``(log p, new_state)``."""
    w = _val(params, "emb")[token_ids]
    k = _Stacked(params, alpha, conditioned)
    h_new, c_new, d_new, _ = _cell(k, state.h, state.c, state.d, w)
    logits = h_new @ _val(params, "dec.W_out").T + _val(params, "dec.b_out")
    return log_softmax(logits), DecoderState(h_new, c_new, d_new)


def sequence_loss(P, y, Dtraj, cfg=LossConfig()):
    """L = -sum_t log p_t[y_t] + ||d_T|| + sum_t eta * xi ** ||d_t - d_{t-1}|| for one sequence.

    ``P`` is T x V, ``y`` length T, ``Dtraj`` (T+1) x D holding d_0..d_T.
    """
    P = np.asarray(P, dtype=DTYPE)
    y = np.asarray(y)
    Dtraj = np.asarray(Dtraj, dtype=DTYPE)
    T = len(y)
    if P.shape[0] != T or Dtraj.shape[0] != T + 1:
        raise ShapeMismatch("loss inputs disagree in length")
    nll = -np.sum(np.log(np.maximum(P[np.arange(T), y], 1e-12)))
    final = np.linalg.norm(Dtraj[-1])
    jumps = np.linalg.norm(np.diff(Dtraj, axis=0), axis=1)
    return float(nll + final + np.sum(cfg.eta * cfg.xi ** jumps))


class DecoderBatch:
    """Teacher-forcing inputs: ``inputs`` = bos + y[:-1], ``targets`` = y, padded."""

    def __init__(self, targets, max_len=30):
        lengths = np.array([len(y) for y in targets])
        if np.any(lengths < 1):
            raise SequenceTooLong("target sequences must have at least one token")
        if lengths.max() > max_len:
            raise SequenceTooLong(f"target of length {lengths.max()} exceeds max_len={max_len}")
        self.B, self.T = len(targets), int(lengths.max())
        self.lengths = lengths
        self.targets = np.zeros((self.B, self.T), dtype=np.int64)
        self.inputs = np.zeros((self.B, self.T), dtype=np.int64)
        for b, y in enumerate(targets):
            self.targets[b, :len(y)] = y
            self.inputs[b, 0] = BOS_ID
            self.inputs[b, 1:len(y)] = y[:-1]
        self.mask = (np.arange(self.T)[None, :] < lengths[:, None]).astype(DTYPE)


def forward_teacher_forced(params, x, d0, batch, alpha=1.0, cfg=LossConfig(),
                           conditioned=True, in_masks=None, out_masks=None):
    """Teacher-forced pass over a DecoderBatch.

    Returns ``(loss, cache)``; ``cache["logp"]`` is B x T x V and
    ``cache["d"]`` is B x (T+1) x D (d_0..d_T). The loss is summed over the
    batch, each example contributing its own-length loss. ``in_masks`` and
    ``out_masks`` (B x T x E, B x T x H) are dropout masks.
    """
    k = _Stacked(params, alpha, conditioned)
    emb = _val(params, "emb")
    W_out, b_out = _val(params, "dec.W_out"), _val(params, "dec.b_out")
    state = init_state(x, d0 if conditioned else None, params)
    B, T, H = batch.B, batch.T, k.H
    h, c, d = state.h, state.c, state.d
    hs_out = np.empty((B, T, H), dtype=DTYPE)
    D = d.shape[1] if conditioned else 0
    dtraj = np.empty((B, T + 1, D), dtype=DTYPE)
    if conditioned:
        dtraj[:, 0] = d
    steps = []
    for t in range(T):
        w = emb[batch.inputs[:, t]]
        if in_masks is not None:
            w = w * in_masks[:, t]
        h_new, c_new, d_new, gates = _cell(k, h, c, d, w)
        steps.append((h, c, d, w, gates))
        h, c, d = h_new, c_new, d_new
        if conditioned:
            dtraj[:, t + 1] = d
        hs_out[:, t] = h if out_masks is None else h * out_masks[:, t]
    logp = log_softmax(hs_out @ W_out.T + b_out)
    rows, cols = np.nonzero(batch.mask)
    tgt_logp = logp[rows, cols, batch.targets[rows, cols]]
    nll = -np.sum(np.maximum(tgt_logp, LOG_CLAMP))
    reg = 0.0
    if conditioned:
        final = dtraj[np.arange(B), batch.lengths]
        reg += np.linalg.norm(final, axis=1).sum()
        jumps = np.linalg.norm(np.diff(dtraj, axis=1), axis=2)
        reg += np.sum(batch.mask * cfg.eta * cfg.xi ** jumps)
    cache = {"k": k, "x": np.atleast_2d(x), "h0": state.h, "c0": state.c, "steps": steps,
             "hs_out": hs_out, "logp": logp, "d": dtraj, "batch": batch, "cfg": cfg,
             "in_masks": in_masks, "out_masks": out_masks, "unclamped": tgt_logp > LOG_CLAMP,
             "conditioned": conditioned}
    return float(nll + reg), cache


def _act_vector_grads(dtraj, batch, cfg):
    """Gradient of ||d_T|| + sum_t eta xi^||d_t - d_{t-1}|| w.r.t. each d_t (zero at norm 0)."""
    B = batch.B
    dD = np.zeros_like(dtraj)
    final = dtraj[np.arange(B), batch.lengths]
    n = np.linalg.norm(final, axis=1, keepdims=True)
    dD[np.arange(B), batch.lengths] += np.divide(final, n, out=np.zeros_like(final), where=n > 0)
    delta = np.diff(dtraj, axis=1)
    s = np.linalg.norm(delta, axis=2, keepdims=True)
    coef = batch.mask[:, :, None] * cfg.eta * cfg.xi ** s * np.log(cfg.xi)
    u = coef * np.divide(delta, s, out=np.zeros_like(delta), where=s > 0)
    dD[:, 1:] += u
    dD[:, :-1] -= u
    return dD


def backward(params, cache, grad_scale=1.0):
    """Accumulate (scaled) gradients of the cached loss into ``params``; return d loss / d x."""
    k, batch, cfg = cache["k"], cache["batch"], cache["cfg"]
    B, T, H = batch.B, batch.T, k.H
    conditioned = cache["conditioned"]
    W_out = params["dec.W_out"].value
    probs = np.exp(cache["logp"])
    dlogits = probs
    rows, cols = np.nonzero(batch.mask)
    dlogits[rows, cols, batch.targets[rows, cols]] -= 1.0
    keep = np.zeros((B, T), dtype=DTYPE)
    keep[rows, cols] = cache["unclamped"]
    dlogits *= keep[:, :, None] * grad_scale
    V = dlogits.shape[2]
    flat = dlogits.reshape(B * T, V)
    params["dec.W_out"].grad += flat.T @ cache["hs_out"].reshape(B * T, H)
    params["dec.b_out"].grad += flat.sum(axis=0, keepdims=True)
    dH = dlogits @ W_out
    if cache["out_masks"] is not None:
        dH = dH * cache["out_masks"]
    dD = _act_vector_grads(cache["d"], batch, cfg) * grad_scale if conditioned else None

    dW = np.zeros_like(k.W)
    dU = np.zeros_like(k.U)
    db = np.zeros_like(k.b)
    if conditioned:
        dW_wr = np.zeros_like(k.W_wr)
        dW_hr = np.zeros_like(k.W_hr)
        dW_dc = np.zeros_like(k.W_dc)
        dd_next = np.zeros_like(dD[:, 0])
    dh_next = np.zeros((B, H), dtype=DTYPE)
    dc_next = np.zeros((B, H), dtype=DTYPE)
    dw_all = np.empty((B, T, k.U.shape[1]), dtype=DTYPE)
    for t in reversed(range(T)):
        h, c, d, w, (i, f, o, g, r, kd, tc) = cache["steps"][t]
        dh = dH[:, t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        da = np.concatenate([dc * g * i * (1.0 - i), dc * c * f * (1.0 - f),
                             do * o * (1.0 - o), dc * i * (1.0 - g * g)], axis=1)
        dW += da.T @ h
        dU += da.T @ w
        db += da.sum(axis=0, keepdims=True)
        dh_next = da @ k.W
        dw = da @ k.U
        if conditioned:
            dkd = dc * (1.0 - kd * kd)
            d_new = r * d
            dW_dc += dkd.T @ d_new
            dd_new = dD[:, t + 1] + dd_next + dkd @ k.W_dc
            dr = dd_new * d * r * (1.0 - r)
            dW_wr += dr.T @ w
            dW_hr += k.alpha * (dr.T @ h)
            dw += dr @ k.W_wr
            dh_next += k.alpha * (dr @ k.W_hr)
            dd_next = dd_new * r
        dc_next = dc * f
        dw_all[:, t] = dw
    for n, g in enumerate(GATES):
        params[f"dec.W_{g}"].grad += dW[n * H:(n + 1) * H]
        params[f"dec.U_{g}"].grad += dU[n * H:(n + 1) * H]
        params[f"dec.b_{g}"].grad += db[:, n * H:(n + 1) * H]
    if conditioned:
        params["dec.W_wr"].grad += dW_wr
        params["dec.W_hr"].grad += dW_hr
        params["dec.W_dc"].grad += dW_dc
    if cache["in_masks"] is not None:
        dw_all = dw_all * cache["in_masks"]
    dw_all *= batch.mask[:, :, None]
    np.add.at(params["emb"].grad, batch.inputs.reshape(-1), dw_all.reshape(B * T, -1))

    x, h0, c0 = cache["x"], cache["h0"], cache["c0"]
    dh0 = dh_next * (1.0 - h0 * h0)
    dc0 = dc_next * (1.0 - c0 * c0)
    params["dec.W_hx"].grad += dh0.T @ x
    params["dec.b_hx"].grad += dh0.sum(axis=0, keepdims=True)
    params["dec.W_cx"].grad += dc0.T @ x
    params["dec.b_cx"].grad += dc0.sum(axis=0, keepdims=True)
    return dh0 @ params["dec.W_hx"].value + dc0 @ params["dec.W_cx"].value
