"""The ld-sc-LSTM model: shared embeddings, act-slot encoder and sc-LSTM decoder."""

import numpy as np

from ldsclstm import encoder, scdecoder
from ldsclstm.config import Config
from ldsclstm.corpus import EOS_ID, Inventory, Vocabulary
from ldsclstm.numerics import ParamSet, Rng, dropout_mask, init_uniform, load_checkpoint, save_checkpoint


def init_lstm(params, prefix, rng, n_in, n_hidden):
    params.add(f"{prefix}.W_x", init_uniform(rng, (4 * n_hidden, n_in)))
    params.add(f"{prefix}.W_h", init_uniform(rng, (4 * n_hidden, n_hidden)))
    b = np.zeros((1, 4 * n_hidden))
    b[0, n_hidden:2 * n_hidden] = 1.0
    params.add(f"{prefix}.b", b)


def init_decoder(params, rng, shapes):
    for name, shape in shapes.items():
        if name == "dec.b_f":
            params.add(name, np.ones(shape))
        elif name.startswith("dec.b_"):
            params.add(name, np.zeros(shape))
        else:
            params.add(name, init_uniform(rng, shape))


class LdScLstm:
    """Encoder-decoder over (vocabulary, inventory) with all weights in ``self.params``.

    ``cfg.lexical = False`` forces e_t to zero, giving the delexicalized-only
    baseline with an identical architecture.
    """

    def __init__(self, vocab, inventory, cfg=None, params=None, seed=None):
        self.vocab = vocab
        self.inventory = inventory
        self.cfg = cfg or Config()
        self.loss_cfg = scdecoder.LossConfig(self.cfg.eta, self.cfg.xi)
        if params is None:
            params = self.init_params(Rng(self.cfg.seed if seed is None else seed))
        self.params = params

    @property
    def sizes(self):
        c = self.cfg
        return len(self.vocab), c.embedding_dim, c.encoder_hidden, c.decoder_hidden, self.inventory.D

    def init_params(self, rng):
        V, E, H_enc, H, D = self.sizes
        params = ParamSet()
        params.add("emb", init_uniform(rng, (V, E)))
        init_lstm(params, "enc.fwd", rng, D + E, H_enc)
        init_lstm(params, "enc.bwd", rng, D + E, H_enc)
        init_decoder(params, rng, scdecoder.decoder_param_shapes(V, E, H, D, H_enc))
        return params

    # --- training-time passes -------------------------------------------------

    def _targets(self, examples):
        return [self.vocab.encode(ex.delex_text) + [EOS_ID] for ex in examples]

    def forward(self, examples, rng=None):
        """Summed loss over ``examples`` plus a cache; dropout only when ``rng`` is given."""
        enc_batch = encoder.EncoderBatch([ex.mr for ex in examples], self.inventory, self.vocab,
                                         self.cfg.max_acts)
        dec_batch = scdecoder.DecoderBatch(self._targets(examples), self.cfg.max_len)
        E, H = self.cfg.embedding_dim, self.cfg.decoder_hidden
        e_mask = in_masks = out_masks = None
        if rng is not None and self.cfg.dropout > 0:
            p = self.cfg.dropout
            e_mask = dropout_mask(rng, (enc_batch.B, enc_batch.M, E), p)
            in_masks = dropout_mask(rng, (dec_batch.B, dec_batch.T, E), p)
            out_masks = dropout_mask(rng, (dec_batch.B, dec_batch.T, H), p)
        x, enc_cache = encoder.encoder_forward(self.params, enc_batch, self.cfg.lexical, e_mask)
        loss, dec_cache = scdecoder.forward_teacher_forced(
            self.params, x, enc_batch.d0, dec_batch, self.cfg.alpha, self.loss_cfg,
            in_masks=in_masks, out_masks=out_masks)
        return loss, (enc_batch, enc_cache, dec_cache)

    def loss(self, examples):
        return self.forward(examples)[0]

    def backward(self, cache, grad_scale=1.0):
        enc_batch, enc_cache, dec_cache = cache
        dx = scdecoder.backward(self.params, dec_cache, grad_scale)
        encoder.encoder_backward(self.params, enc_batch, enc_cache, dx)

    def loss_and_grad(self, examples, rng=None, average=True):
        """Accumulate gradients (averaged over the batch by default); return the summed loss."""
        loss, cache = self.forward(examples, rng)
        self.backward(cache, 1.0 / len(examples) if average else 1.0)
        return loss

    # --- decoding interface ---------------------------------------------------

    def start(self, mr):
        """Initial decoder state for one meaning representation (batch of one row)."""
        enc_batch = encoder.EncoderBatch([mr], self.inventory, self.vocab, self.cfg.max_acts)
        x, _ = encoder.encoder_forward(self.params, enc_batch, self.cfg.lexical)
        return scdecoder.init_state(x, enc_batch.d0, self.params)

    def step(self, state, token_ids):
        return scdecoder.step_logprobs(state, np.asarray(token_ids), self.params, self.cfg.alpha)

    @property
    def eos_id(self):
        return EOS_ID

    # --- persistence ------------------------------------------------------------

    def meta(self):
        return {"kind": "ld-sc-lstm", "config": self.cfg.to_dict(), "vocab": self.vocab.itos,
                "inventory": self.inventory.to_json()}

    def save(self, path):
        save_checkpoint(path, self.params, self.meta())

    @classmethod
    def load(cls, path):
        params, meta = load_checkpoint(path)
        if meta.get("kind") != "ld-sc-lstm":
            raise ValueError(f"{path} is not an ld-sc-LSTM checkpoint")
        return cls(Vocabulary(meta["vocab"]), Inventory.from_json(meta["inventory"]),
                   Config.from_dict(meta["config"]), params=params)
