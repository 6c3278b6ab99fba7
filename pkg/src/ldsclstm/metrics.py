"""Corpus BLEU-4, ROUGE-L and CIDEr with coco-caption conventions, plus ERR reporting."""

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field

from ldsclstm.corpus import delexicalize, tokenize
from ldsclstm.errors import AlignmentError, CorpusTooSmall, EmptyCorpus
from ldsclstm.generation import slot_error_rate

ROUGE_BETA = 1.2
CIDER_SCALE = 10.0
MAX_N = 4


@dataclass(frozen=True)
class EvalPair:
    candidate: tuple
    references: tuple

    def __post_init__(self):
        object.__setattr__(self, "candidate", tuple(self.candidate))
        object.__setattr__(self, "references", tuple(tuple(r) for r in self.references))
        if not self.references:
            raise ValueError("an EvalPair needs at least one reference")


@dataclass
class MetricReport:
    bleu4: float
    rouge_l: float
    cider: float
    err: float = None
    pairs: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def table(self):
        """Aligned text table; METEOR is omitted (needs external resources)."""
        head = ["B-4", "R_L", "C", "ERR"]
        vals = [f"{self.bleu4:.3f}", f"{self.rouge_l:.3f}", f"{self.cider:.3f}",
                "-" if self.err is None else f"{self.err:.3f}"]
        widths = [max(len(a), len(b)) for a, b in zip(head, vals)]
        return "\n".join("  ".join(s.rjust(w) for s, w in zip(row, widths)) for row in (head, vals)) + "\n"


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check(pairs):
    if not pairs:
        raise EmptyCorpus("no candidate/reference pairs")


def _closest_ref_len(c, refs):
    return min((abs(len(r) - c), len(r)) for r in refs)[1]


def bleu_counts(pairs, max_n=MAX_N):
    """Pooled ``(clipped matches, totals, candidate length, reference length)``."""
    matches, totals = [0] * max_n, [0] * max_n
    c_len = r_len = 0
    for pair in pairs:
        cand = pair.candidate
        c_len += len(cand)
        r_len += _closest_ref_len(len(cand), pair.references)
        for n in range(1, max_n + 1):
            counts = ngrams(cand, n)
            best = Counter()
            for ref in pair.references:
                best |= ngrams(ref, n)
            matches[n - 1] += sum(min(k, best[g]) for g, k in counts.items())
            totals[n - 1] += max(len(cand) - n + 1, 0)
    return matches, totals, c_len, r_len


def modified_precision(pairs, n):
    matches, totals, _, _ = bleu_counts(pairs, n)
    return matches[n - 1] / totals[n - 1] if totals[n - 1] else 0.0


def bleu4(pairs):
    """Corpus BLEU with uniform 1..4-gram weights, no smoothing."""
    _check(pairs)
    matches, totals, c, r = bleu_counts(pairs)
    if c == 0 or min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / MAX_N
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_p)


def lcs_length(a, b):
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_pair(candidate, references, beta=ROUGE_BETA):
    # per coco-caption: best precision and best recall over references
    if not candidate:
        return 0.0
    prec = max(lcs_length(candidate, r) / len(candidate) for r in references)
    rec = max(lcs_length(candidate, r) / len(r) if r else 0.0 for r in references)
    if prec == 0 or rec == 0:
        return 0.0
    return (1 + beta ** 2) * prec * rec / (rec + beta ** 2 * prec)


def rouge_l(pairs):
    _check(pairs)
    return sum(rouge_l_pair(p.candidate, p.references) for p in pairs) / len(pairs)


def _tfidf(tokens, df, log_n):
    vecs, norms = [], []
    for n in range(1, MAX_N + 1):
        vec = {g: tf * (log_n - math.log(max(1.0, df[g]))) for g, tf in ngrams(tokens, n).items()}
        vecs.append(vec)
        norms.append(math.sqrt(sum(v * v for v in vec.values())))
    return vecs, norms


def cider_scores(pairs):
    """Per-pair CIDEr (no length penalty), document frequencies from this corpus's references."""
    if len(pairs) < 2:
        raise CorpusTooSmall("CIDEr needs at least two pairs for document frequencies")
    df = defaultdict(float)
    for p in pairs:
        for g in {g for r in p.references for n in range(1, MAX_N + 1) for g in ngrams(r, n)}:
            df[g] += 1
    log_n = math.log(len(pairs))
    scores = []
    for p in pairs:
        hv, hn = _tfidf(p.candidate, df, log_n)
        total = 0.0
        for ref in p.references:
            rv, rn = _tfidf(ref, df, log_n)
            for n in range(MAX_N):
                if hn[n] and rn[n]:
                    total += sum(v * rv[n].get(g, 0.0) for g, v in hv[n].items()) / (hn[n] * rn[n])
        scores.append(CIDER_SCALE * total / MAX_N / len(p.references))
    return scores


def cider(pairs):
    scores = cider_scores(pairs)
    return sum(scores) / len(scores)


def score_pairs(pairs):
    _check(pairs)
    ciders = cider_scores(pairs)
    per_pair = [{"rouge_l": rouge_l_pair(p.candidate, p.references), "cider": c}
                for p, c in zip(pairs, ciders)]
    return MetricReport(bleu4(pairs), rouge_l(pairs), sum(ciders) / len(ciders), pairs=per_pair)


def read_outputs(path):
    """Lines of generated text, optionally ``id<TAB>sentence``; returns ``[(id or None, tokens)]``."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if "\t" in line:
                ident, text = line.split("\t", 1)
                rows.append((ident, tokenize(text)))
            else:
                rows.append((None, tokenize(line)))
    return rows


def evaluate_outputs(rows, dataset):
    """Score generated sentences aligned 1:1 with ``dataset``; adds mean ERR."""
    if len(rows) != len(dataset):
        raise AlignmentError(f"{len(rows)} outputs for {len(dataset)} examples")
    for n, ((ident, _), ex) in enumerate(zip(rows, dataset)):
        if ident is not None and ident != ex.id:
            raise AlignmentError(f"output {n + 1} has id {ident!r}, expected {ex.id!r}")
    pairs = [EvalPair(tokens, [ex.text]) for (_, tokens), ex in zip(rows, dataset)]
    report = score_pairs(pairs)
    errs = [slot_error_rate(delexicalize(tokens, ex.mr, strict=False), ex.mr)
            for (_, tokens), ex in zip(rows, dataset)]
    for row, e, ex in zip(report.pairs, errs, dataset):
        row["err"] = e
        row["id"] = ex.id
    report.err = sum(errs) / len(errs)
    return report


def evaluate_corpus(outputs_path, dataset):
    return evaluate_outputs(read_outputs(outputs_path), dataset)
