"""Beam search, slot error rate, ERR reranking and lexicalization of the winner."""

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ldsclstm.corpus import BOS_ID, PAD_ID, detokenize, is_placeholder, lexicalize
from ldsclstm.errors import EmptyBeam
from ldsclstm.scdecoder import DecoderState

log = logging.getLogger(__name__)

BANNED = (PAD_ID, BOS_ID)


@dataclass(frozen=True)
class GenerationConfig:
    beam_width: int = 10
    max_len: int = 30
    err_lambda: float = 1000.0

    def __post_init__(self):
        if self.beam_width < 1 or self.max_len < 1 or self.err_lambda < 0:
            raise ValueError("need beam_width >= 1, max_len >= 1, err_lambda >= 0")

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.beam_width, cfg.max_len, cfg.err_lambda)


@dataclass
class Hypothesis:
    tokens: tuple
    logprob: float
    state: DecoderState = field(repr=False, default=None)
    finished: bool = False
    err: float = 0.0
    score: float = 0.0


def _row(state, i):
    d = None if state.d is None else state.d[i:i + 1]
    return DecoderState(state.h[i:i + 1], state.c[i:i + 1], d)


def _stack(states):
    d = None if states[0].d is None else np.vstack([s.d for s in states])
    return DecoderState(np.vstack([s.h for s in states]), np.vstack([s.c for s in states]), d)


def _rank_key(h):
    return (-h.logprob, h.tokens, len(h.tokens))


def beam_search(model, mr, cfg=GenerationConfig(), banned=BANNED):
    """Beam search over ``model.start(mr)`` / ``model.step(state, tokens)``.

    Every live hypothesis is expanded over the whole output vocabulary (except
    ``banned`` ids) and the best ``beam_width - len(pool)`` candidates survive.
    Candidates ending in eos retire into the result pool; the rest stay live
    until ``max_len`` caps them. Ties go to the lower token sequence, then the
    shorter one. ``tokens`` exclude the final eos.
    """
    eos = model.eos_id
    live = [Hypothesis((), 0.0, model.start(mr))]
    pool = []
    for step in range(cfg.max_len):
        if not live or len(pool) >= cfg.beam_width:
            break
        states = _stack([h.state for h in live])
        last = [h.tokens[-1] if h.tokens else BOS_ID for h in live]
        logp, new_states = model.step(states, last)
        logp = np.array(logp, dtype=float)
        logp[:, list(banned)] = -np.inf
        candidates = []
        for n, h in enumerate(live):
            for tok in np.flatnonzero(np.isfinite(logp[n])):
                candidates.append((h.logprob + logp[n, tok], h.tokens + (int(tok),), n))
        candidates.sort(key=lambda c: (-c[0], c[1], len(c[1])))
        keep = candidates[:cfg.beam_width - len(pool)]
        live = []
        for lp, tokens, n in keep:
            if tokens[-1] == eos:
                pool.append(Hypothesis(tokens[:-1], float(lp), _row(new_states, n), True))
            else:
                live.append(Hypothesis(tokens, float(lp), _row(new_states, n)))
    pool.extend(live)
    if not pool:
        raise EmptyBeam("beam search produced no hypotheses")
    pool.sort(key=_rank_key)
    return pool[:cfg.beam_width]


def required_slots(mr):
    return Counter(a.placeholder for a in mr.acts if a.value)


def slot_counts(mr, tokens):
    """``(missing, redundant, required)`` placeholder counts for a delexicalized candidate."""
    required = required_slots(mr)
    emitted = Counter(t for t in tokens if is_placeholder(t))
    missing = sum(max(0, n - emitted[k]) for k, n in required.items())
    redundant = sum(max(0, n - required[k]) for k, n in emitted.items())
    return missing, redundant, sum(required.values())


def slot_error_rate(tokens, mr, inventory=None):
    """ERR = (missing + redundant) / N over non-empty-valued slots of ``mr``.

    When N = 0 the denominator is taken as 1, so ERR is 0 unless placeholders
    are emitted that nothing asked for.
    """
    missing, redundant, n = slot_counts(mr, tokens)
    return (missing + redundant) / max(n, 1)


def rerank(hyps, mr, cfg=GenerationConfig(), vocab=None):
    """Stable sort by ``logprob - err_lambda * ERR``; sets ``err`` and ``score`` on each hypothesis."""
    if not hyps:
        raise EmptyBeam("nothing to rerank")
    for h in hyps:
        tokens = vocab.decode(h.tokens) if vocab is not None else h.tokens
        h.err = slot_error_rate(tokens, mr)
        h.score = h.logprob - cfg.err_lambda * h.err
    return sorted(hyps, key=lambda h: -h.score)


def generate_nbest(model, mr, cfg=GenerationConfig()):
    """Reranked hypotheses with their lexicalized sentences: list of ``(hyp, tokens)``."""
    hyps = rerank(beam_search(model, mr, cfg), mr, cfg, model.vocab)
    return [(h, lexicalize(model.vocab.decode(h.tokens), mr, strict=False)) for h in hyps]


def warn_unbound(tokens):
    unbound = [t for t in tokens if is_placeholder(t)]
    if unbound:
        log.warning("no value bound to %s; emitted literally", ", ".join(unbound))


def generate(model, mr, cfg=GenerationConfig()):
    """Top reranked hypothesis, lexicalized; unbound placeholders stay literal (with a warning)."""
    tokens = generate_nbest(model, mr, cfg)[0][1]
    warn_unbound(tokens)
    return tokens


def greedy_decode(model, mr, max_len=30, banned=BANNED):
    """Repeated argmax; used as an independent check of width-1 beam search."""
    state = model.start(mr)
    tokens, last = [], BOS_ID
    for _ in range(max_len):
        logp, state = model.step(state, [last])
        logp = np.array(logp[0], dtype=float)
        logp[list(banned)] = -np.inf
        last = int(np.argmax(logp))
        if last == model.eos_id:
            break
        tokens.append(last)
    return tuple(tokens)


def format_nbest(nbest):
    """N-best lines: rank, score, logprob, ERR, lexicalized text (tab separated)."""
    return [f"{rank}\t{h.score:.6f}\t{h.logprob:.6f}\t{h.err:.6f}\t{detokenize(tokens)}"
            for rank, (h, tokens) in enumerate(nbest, 1)]
