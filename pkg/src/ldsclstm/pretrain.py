"""Sentence autoencoder pretraining and transfer of its recurrent decoder weights."""

import logging

import numpy as np

from ldsclstm import scdecoder
from ldsclstm.config import Config
from ldsclstm.corpus import EOS_ID, Vocabulary, build_sentence_vocabulary, tokenize
from ldsclstm.encoder import lstm_backward, lstm_forward
from ldsclstm.errors import EmptyInput, ShapeMismatch
from ldsclstm.model import init_decoder, init_lstm
from ldsclstm.numerics import (DTYPE, ParamSet, Rng, dropout_mask, init_uniform, load_checkpoint,
                               save_checkpoint)
from ldsclstm.training import train

log = logging.getLogger(__name__)

KEYWORDS = ("phone", "postcode", "price", "food", "area", "restaurant", "nice", "address",
            "reservation", "book")
TRANSFERRED = ("dec.W_f", "dec.W_i", "dec.W_o", "dec.W_c")
CKPT_PREFIX = "ae."


def read_sentences(path):
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line) for line in fh if line.strip()]


def keyword_score(tokens, keywords=KEYWORDS):
    keys = set(keywords)
    return sum(1 for t in tokens if t in keys)


def select_pretraining_sentences(sentences, keywords=KEYWORDS, k=5000):
    """Top ``k`` sentences by keyword-token count, ties kept in input order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sentences = [tuple(s) for s in sentences]
    if not sentences:
        raise EmptyInput("no sentences to select from")
    scores = [keyword_score(s, keywords) for s in sentences]
    order = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))[:k]
    return [sentences[i] for i in order]


class SentenceAutoencoder:
    """Bi-LSTM over word embeddings, pooled into a context that seeds a plain LSTM decoder."""

    def __init__(self, vocab, cfg=None, params=None, seed=None):
        self.vocab = vocab
        self.cfg = cfg or Config()
        self.loss_cfg = scdecoder.LossConfig(self.cfg.eta, self.cfg.xi)
        if params is None:
            params = self.init_params(Rng(self.cfg.seed if seed is None else seed))
        self.params = params

    def init_params(self, rng):
        c = self.cfg
        V, E, H_enc = len(self.vocab), c.ae_embedding_dim, c.ae_encoder_hidden
        params = ParamSet()
        params.add("emb", init_uniform(rng, (V, E)))
        init_lstm(params, "enc.fwd", rng, E, H_enc)
        init_lstm(params, "enc.bwd", rng, E, H_enc)
        init_decoder(params, rng, scdecoder.decoder_param_shapes(
            V, E, c.decoder_hidden, 0, H_enc, conditioned=False))
        return params

    def _encode(self, sentences, e_mask=None):
        emb = self.params["emb"].value
        ids = [self.vocab.encode(s) for s in sentences]
        lengths = np.array([len(s) for s in ids])
        B, L = len(ids), int(lengths.max())
        Z = np.zeros((B, L, emb.shape[1]), dtype=DTYPE)
        for b, row in enumerate(ids):
            Z[b, :len(row)] = emb[row]
        if e_mask is not None:
            Z *= e_mask
        rev = np.zeros_like(Z)
        for b, n in enumerate(lengths):
            rev[b, :n] = Z[b, n - 1::-1]
        fwd = tuple(self.params[f"enc.fwd.{k}"].value for k in ("W_x", "W_h", "b"))
        bwd = tuple(self.params[f"enc.bwd.{k}"].value for k in ("W_x", "W_h", "b"))
        hf, cache_f = lstm_forward(Z, *fwd)
        hb, cache_b = lstm_forward(rev, *bwd)
        weights = (np.arange(L)[None, :] < lengths[:, None]) / lengths[:, None]
        x = np.concatenate([np.einsum("bt,bth->bh", weights, hf),
                            np.einsum("bt,bth->bh", weights, hb)], axis=1)
        return x, (ids, lengths, weights, cache_f, cache_b, e_mask)

    def _encode_backward(self, cache, dx):
        ids, lengths, weights, cache_f, cache_b, e_mask = cache
        H = dx.shape[1] // 2
        dZ, dWx, dWh, db, _, _ = lstm_backward(weights[:, :, None] * dx[:, None, :H], cache_f)
        for name, g in zip(("W_x", "W_h", "b"), (dWx, dWh, db)):
            self.params[f"enc.fwd.{name}"].grad += g
        dRev, dWx, dWh, db, _, _ = lstm_backward(weights[:, :, None] * dx[:, None, H:], cache_b)
        for name, g in zip(("W_x", "W_h", "b"), (dWx, dWh, db)):
            self.params[f"enc.bwd.{name}"].grad += g
        for b, n in enumerate(lengths):
            dZ[b, :n] += dRev[b, n - 1::-1]
        if e_mask is not None:
            dZ = dZ * e_mask
        for b, row in enumerate(ids):
            np.add.at(self.params["emb"].grad, row, dZ[b, :len(row)])

    def forward(self, sentences, rng=None):
        targets = [self.vocab.encode(s) + [EOS_ID] for s in sentences]
        dec_batch = scdecoder.DecoderBatch(targets, self.cfg.max_len)
        e_mask = in_masks = out_masks = None
        if rng is not None and self.cfg.dropout > 0:
            p, E, H = self.cfg.dropout, self.cfg.ae_embedding_dim, self.cfg.decoder_hidden
            e_mask = dropout_mask(rng, (dec_batch.B, dec_batch.T - 1, E), p)
            in_masks = dropout_mask(rng, (dec_batch.B, dec_batch.T, E), p)
            out_masks = dropout_mask(rng, (dec_batch.B, dec_batch.T, H), p)
        x, enc_cache = self._encode(sentences, e_mask)
        loss, dec_cache = scdecoder.forward_teacher_forced(
            self.params, x, None, dec_batch, conditioned=False,
            in_masks=in_masks, out_masks=out_masks)
        return loss, (enc_cache, dec_cache)

    def loss(self, sentences):
        return self.forward(sentences)[0]

    def loss_and_grad(self, sentences, rng=None, average=True):
        loss, (enc_cache, dec_cache) = self.forward(sentences, rng)
        dx = scdecoder.backward(self.params, dec_cache, 1.0 / len(sentences) if average else 1.0)
        self._encode_backward(enc_cache, dx)
        return loss

    def start(self, sentence):
        x, _ = self._encode([sentence])
        return scdecoder.init_state(x, None, self.params)

    def step(self, state, token_ids):
        return scdecoder.step_logprobs(state, np.asarray(token_ids), self.params, conditioned=False)

    @property
    def eos_id(self):
        return EOS_ID

    def save(self, path):
        meta = {"kind": "sentence-autoencoder", "config": self.cfg.to_dict(), "vocab": self.vocab.itos}
        save_checkpoint(path, {CKPT_PREFIX + k: p for k, p in self.params.items()}, meta)

    @classmethod
    def load(cls, path):
        stored, meta = load_checkpoint(path)
        if meta.get("kind") != "sentence-autoencoder":
            raise ValueError(f"{path} is not an autoencoder checkpoint")
        params = ParamSet()
        for name, p in stored.items():
            params.add(name[len(CKPT_PREFIX):], p.value)
        return cls(Vocabulary(meta["vocab"]), Config.from_dict(meta["config"]), params=params)


def train_autoencoder(sentences, cfg=None, epochs=None, seed=None):
    """Train a SentenceAutoencoder to reconstruct ``sentences`` (teacher-forced NLL)."""
    cfg = cfg or Config()
    sentences = [tuple(s) for s in sentences if s]
    if not sentences:
        raise EmptyInput("no sentences for the autoencoder")
    keep = [s for s in sentences if len(s) < cfg.max_len]
    if len(keep) < len(sentences):
        log.warning("dropped %d sentences longer than max_len", len(sentences) - len(keep))
    if not keep:
        raise EmptyInput("every sentence exceeds max_len")
    ae = SentenceAutoencoder(build_sentence_vocabulary(keep, cfg.min_count), cfg, seed=seed)
    train(ae, keep, epochs=cfg.ae_epochs if epochs is None else epochs, seed=seed,
          patience=max(cfg.patience, 1))
    return ae


def transfer_weights(ae_params, target_params):
    """Copy of ``target_params`` whose recurrent gate matrices W_f, W_i, W_o, W_c come from the autoencoder.

    Nothing is frozen; the copied matrices fine-tune with everything else.
    """
    ae_params = getattr(ae_params, "params", ae_params)
    out = target_params.copy()
    for name in TRANSFERRED:
        src = ae_params[name].value
        if src.shape != out[name].value.shape:
            raise ShapeMismatch(name)
    for name in TRANSFERRED:
        out[name].value[...] = ae_params[name].value
    return out
