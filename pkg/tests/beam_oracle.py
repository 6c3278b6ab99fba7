"""Brute-force enumeration of decoder outputs, scored through the teacher-forced pass."""

import itertools

import numpy as np

from ldsclstm.corpus import BOS_ID, PAD_ID
from ldsclstm.encoder import EncoderBatch, encoder_forward
from ldsclstm.scdecoder import DecoderBatch, forward_teacher_forced


def sequence_logprob(model, mr, target):
    enc = EncoderBatch([mr], model.inventory, model.vocab)
    x, _ = encoder_forward(model.params, enc, model.cfg.lexical)
    _, cache = forward_teacher_forced(model.params, x, enc.d0, DecoderBatch([list(target)]),
                                      model.cfg.alpha)
    return float(sum(cache["logp"][0, t, tok] for t, tok in enumerate(target)))


def enumerate_all(model, mr, max_len):
    """Every finished (eos within max_len) or length-capped sequence, ranked like beam_search."""
    eos = model.eos_id
    words = [i for i in range(len(model.vocab)) if i not in (PAD_ID, BOS_ID, eos)]
    out = []
    for n in range(max_len):
        for body in itertools.product(words, repeat=n):
            out.append((sequence_logprob(model, mr, body + (eos,)), body))
    for body in itertools.product(words, repeat=max_len):
        out.append((sequence_logprob(model, mr, body), body))
    out.sort(key=lambda r: (-r[0], r[1], len(r[1])))
    return out


def random_small_model(seed, n_words=2, scale=1.5):
    from ldsclstm.config import Config
    from ldsclstm.corpus import RESERVED, DialogueAct, Inventory, MeaningRepresentation, Vocabulary
    from ldsclstm.model import LdScLstm
    inv = Inventory([("INFORM", "FOOD"), ("INFORM", "AREA")])
    vocab = Vocabulary(list(RESERVED) + [f"w{i}" for i in range(n_words)])
    cfg = Config(embedding_dim=3, encoder_hidden=3, decoder_hidden=4, dropout=0.0, seed=seed)
    model = LdScLstm(vocab, inv, cfg)
    rng = np.random.default_rng(seed)
    for p in model.params.values():
        p.value[...] = rng.uniform(-scale, scale, p.shape)
    mr = MeaningRepresentation((DialogueAct("INFORM", "FOOD", ("w0",)), DialogueAct("INFORM", "AREA", ())))
    return model, mr
