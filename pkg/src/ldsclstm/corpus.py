"""Dialogue acts, annotated sentences, (de)lexicalization, vocabulary and dataset I/O."""

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ldsclstm.errors import (
    EmptyDataset,
    OverlappingValues,
    ParseError,
    SchemaError,
    UnboundPlaceholder,
    UnknownActSlot,
    UnknownGrammar,
    ValueNotFound,
)

log = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)

# Acts whose slots carry no value (the act alone asks for the slot).
EMPTY_VALUE_ACTS = frozenset({"REQUEST"})

DEFAULT_MAX_ACTS = 10

_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]")
_LABEL_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")


def tokenize(text):
    """Lowercase and split on whitespace, with punctuation as separate tokens."""
    return tuple(_TOKEN_RE.findall(text.lower()))


def detokenize(tokens):
    return " ".join(tokens)


def placeholder(act, slot):
    return f"SLOT_{act}_{slot}"


def is_placeholder(token):
    return token.startswith("SLOT_")


@dataclass(frozen=True)
class DialogueAct:
    act: str
    slot: str
    value: tuple = ()

    def __post_init__(self):
        if isinstance(self.value, str):
            object.__setattr__(self, "value", tokenize(self.value))
        else:
            object.__setattr__(self, "value", tuple(self.value))
        for label in (self.act, self.slot):
            if not _LABEL_RE.match(label):
                raise SchemaError(f"act/slot labels must be uppercase identifiers, got {label!r}")
        if self.act in EMPTY_VALUE_ACTS and self.value:
            raise SchemaError(f"{self.act} acts only take empty values, got {' '.join(self.value)!r}")

    @property
    def key(self):
        return (self.act, self.slot)

    @property
    def placeholder(self):
        return placeholder(self.act, self.slot)


@dataclass(frozen=True)
class MeaningRepresentation:
    acts: tuple

    def __post_init__(self):
        object.__setattr__(self, "acts", tuple(self.acts))

    @property
    def M(self):
        return len(self.acts)

    def __len__(self):
        return len(self.acts)

    def __iter__(self):
        return iter(self.acts)

    def check(self, max_acts=DEFAULT_MAX_ACTS):
        if not 1 <= self.M <= max_acts:
            raise SchemaError(f"meaning representation needs 1..{max_acts} acts, got {self.M}")

    @classmethod
    def from_pairs(cls, pairs):
        """Build from ``(act, slot, value)`` triples, value being a string or tokens."""
        return cls(tuple(DialogueAct(a, s, v) for a, s, v in pairs))

    def to_json(self):
        return [{"act": a.act, "slot": a.slot, "value": detokenize(a.value)} for a in self.acts]


def _find_free(text, value, claimed):
    n, k = len(text), len(value)
    seen = False
    for start in range(n - k + 1):
        if tuple(text[start:start + k]) == value:
            seen = True
            if not any(claimed[start:start + k]):
                return start, seen
    return None, seen


def delexicalize(text, mr, strict=True):
    """Replace each non-empty value in ``text`` with its SLOT_<ACT>_<SLOT> token.

    Values are matched longest first, each taking its leftmost occurrence not
    already claimed by another value. With ``strict=False`` missing values are
    skipped and every free occurrence is replaced (used to score free text).
    """
    text = list(text)
    claimed = [False] * len(text)
    spans = []
    order = sorted((a for a in mr.acts if a.value), key=lambda a: -len(a.value))
    for act in order:
        start, seen = _find_free(text, act.value, claimed)
        if start is None:
            if not strict:
                continue
            if seen:
                raise OverlappingValues(act.act, act.slot)
            raise ValueNotFound(act.act, act.slot)
        while start is not None:
            spans.append((start, len(act.value), act.placeholder))
            claimed[start:start + len(act.value)] = [True] * len(act.value)
            if strict:
                break
            start, _ = _find_free(text, act.value, claimed)
    for start, k, token in sorted(spans, reverse=True):
        text[start:start + k] = [token]
    return tuple(text)


def lexicalize(delex, mr, strict=True):
    """Substitute values for placeholders, consuming same-slot values in MR order.

    With ``strict=False`` an unbound placeholder is kept as a literal token
    instead of raising.
    """
    pending = {}
    for act in mr.acts:
        if act.value:
            pending.setdefault(act.placeholder, []).append(act.value)
    out = []
    for token in delex:
        if not is_placeholder(token):
            out.append(token)
            continue
        values = pending.get(token)
        if values:
            out.extend(values.pop(0))
        elif strict:
            raise UnboundPlaceholder(token)
        else:
            out.append(token)
    return tuple(out)


@dataclass(frozen=True)
class Example:
    mr: MeaningRepresentation
    text: tuple
    delex_text: tuple
    id: str = ""

    @classmethod
    def from_text(cls, mr, text, id=""):
        tokens = tokenize(text) if isinstance(text, str) else tuple(text)
        delex = delexicalize(tokens, mr)
        if lexicalize(delex, mr) != tokens:
            raise SchemaError("delexicalized text does not lexicalize back to the reference "
                              "(same-slot values must appear in MR order)")
        return cls(mr, tokens, delex, id)


class Inventory:
    """Ordered act-slot pairs; the index of a pair is its coordinate in m_t and d_t."""

    def __init__(self, pairs):
        self.pairs = tuple(tuple(p) for p in pairs)
        if len(set(self.pairs)) != len(self.pairs):
            raise SchemaError("duplicate act-slot pairs in inventory")
        self._index = {p: i for i, p in enumerate(self.pairs)}

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self._index

    def __eq__(self, other):
        return isinstance(other, Inventory) and self.pairs == other.pairs

    def __repr__(self):
        return f"Inventory({list(self.pairs)!r})"

    @property
    def D(self):
        return len(self.pairs)

    def index(self, act, slot):
        try:
            return self._index[(act, slot)]
        except KeyError:
            raise UnknownActSlot(act, slot) from None

    def placeholders(self):
        return [placeholder(a, s) for a, s in self.pairs]

    def to_json(self):
        return [list(p) for p in self.pairs]

    @classmethod
    def from_json(cls, data):
        return cls(tuple(p) for p in data)


@dataclass(frozen=True)
class Dataset:
    examples: tuple
    inventory: Inventory
    tag: str = "train"

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        for ex in self.examples:
            for act in ex.mr.acts:
                if act.key not in self.inventory:
                    raise SchemaError(f"unknown act-slot {act.act}-{act.slot}")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.examples == other.examples
                and self.inventory == other.inventory and self.tag == other.tag)

    def subset(self, indices, tag=None):
        return Dataset(tuple(self.examples[i] for i in indices), self.inventory, tag or self.tag)

    def statistics(self):
        words = Counter(tok for ex in self.examples for tok in ex.text)
        return {"words": sum(words.values()), "sentences": len(self.examples),
                "vocabulary": len(words)}


class Vocabulary:
    """Word/index bijection: reserved tokens at 0..3, then placeholders, then words."""

    def __init__(self, tokens):
        self.itos = list(tokens)
        if tuple(self.itos[:4]) != RESERVED:
            raise ValueError("vocabulary must start with the reserved tokens")
        self.stoi = {w: i for i, w in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate vocabulary entries")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, word):
        return word in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def index(self, word):
        return self.stoi.get(word, UNK_ID)

    def word(self, index):
        return self.itos[index]

    def encode(self, tokens):
        return [self.index(t) for t in tokens]

    def decode(self, ids):
        return tuple(self.itos[i] for i in ids)

    @property
    def words(self):
        """Entries that are neither reserved nor placeholders."""
        return [w for w in self.itos[4:] if not is_placeholder(w)]


def build_vocabulary(dataset, min_count=1):
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if not len(dataset):
        raise EmptyDataset("cannot build a vocabulary from an empty dataset")
    counts = Counter()
    for ex in dataset:
        counts.update(t for t in ex.delex_text if not is_placeholder(t))
        for act in ex.mr.acts:
            counts.update(act.value)
    words = sorted((w for w, n in counts.items() if n >= min_count and w not in RESERVED),
                   key=lambda w: (-counts[w], w))
    return Vocabulary(list(RESERVED) + dataset.inventory.placeholders() + words)


def build_sentence_vocabulary(sentences, min_count=1):
    """Vocabulary over plain sentences (no placeholders), used by the autoencoder."""
    counts = Counter(t for s in sentences for t in s)
    words = sorted((w for w, n in counts.items() if n >= min_count and w not in RESERVED),
                   key=lambda w: (-counts[w], w))
    return Vocabulary(list(RESERVED) + words)


def _parse_record(obj, lineno):
    if not isinstance(obj, dict) or not isinstance(obj.get("acts"), list):
        raise ParseError(lineno, "record must be an object with an 'acts' list")
    acts = []
    for a in obj["acts"]:
        try:
            acts.append(DialogueAct(a["act"], a["slot"], a.get("value", "") or ""))
        except (KeyError, TypeError):
            raise ParseError(lineno, "each act needs 'act' and 'slot' fields") from None
        except SchemaError as exc:
            raise ParseError(lineno, str(exc)) from None
    return MeaningRepresentation(tuple(acts))


def _records(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON: {exc.msg}") from None


def load_dataset(path, inventory=None, tag="train", max_acts=DEFAULT_MAX_ACTS):
    """Read a JSON-lines dataset.

    Unless ``inventory`` is given it is collected from the file in
    first-appearance order; with an explicit inventory unknown pairs raise
    SchemaError.
    """
    examples = []
    seen = {}
    for lineno, obj in _records(path):
        mr = _parse_record(obj, lineno)
        if "text" not in obj or not isinstance(obj["text"], str):
            raise ParseError(lineno, "missing 'text'")
        try:
            mr.check(max_acts)
            ex = Example.from_text(mr, obj["text"], str(obj.get("id", len(examples))))
        except (SchemaError, ValueNotFound, OverlappingValues) as exc:
            raise ParseError(lineno, str(exc)) from None
        for act in mr.acts:
            if inventory is not None and act.key not in inventory:
                raise SchemaError(f"line {lineno}: unknown act-slot {act.act}-{act.slot}")
            seen.setdefault(act.key, None)
        examples.append(ex)
    if not examples:
        raise EmptyDataset(f"{path} contains no examples")
    return Dataset(tuple(examples), inventory or Inventory(seen), tag)


def load_mrs(path, inventory=None):
    """Read meaning representations; ``text`` fields, if present, are ignored."""
    mrs = []
    for lineno, obj in _records(path):
        mr = _parse_record(obj, lineno)
        if inventory is not None:
            for act in mr.acts:
                if act.key not in inventory:
                    raise SchemaError(f"line {lineno}: unknown act-slot {act.act}-{act.slot}")
        mrs.append(mr)
    if not mrs:
        raise EmptyDataset(f"{path} contains no meaning representations")
    return mrs


def save_dataset(dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset:
            rec = {"id": ex.id, "acts": ex.mr.to_json(), "text": detokenize(ex.text)}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def split_train_valid(dataset, fraction=0.10, seed=0):
    """Deterministic random partition; the validation part has round(fraction * N) examples."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    if not len(dataset):
        raise EmptyDataset("cannot split an empty dataset")
    n = len(dataset)
    n_valid = int(round(fraction * n))
    if n_valid == 0:
        log.warning("validation split of %d examples is empty", n)
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    valid_idx = sorted(perm[:n_valid].tolist())
    train_idx = sorted(perm[n_valid:].tolist())
    return dataset.subset(train_idx, "train"), dataset.subset(valid_idx, "valid")


# --- synthetic corpora -------------------------------------------------------

_NAMES = ["super ramen", "golden wok", "the copper kettle", "bella italia", "little seoul",
          "river bar", "the gardenia", "saigon city", "royal spice", "the eagle"]
_AREAS = ["north", "south", "centre", "east", "west"]
_PRICES = ["cheap", "moderate", "expensive"]
_FOODS = ["pizza", "sushi", "curry", "noodles", "tapas", "dumplings", "kebab"]
_PHONES = ["01223 356 555", "01223 400 170", "01223 812 660"]
_ADDRS = ["108 queen street", "12 market hill", "4 kings parade", "77 mill road"]

# Foods paired with a/an in the `article` grammar; vowel-initial values take "an".
_ARTICLE_FOODS = ["apple pie", "omelette", "egg tart", "ice cream", "onion soup", "avocado salad",
                  "udon bowl", "orange cake", "burger", "pizza", "taco", "noodle soup",
                  "pancake", "curry", "steak", "fish stew"]

_BASIC_TEMPLATES = [
    ([("INFORM", "NAME"), ("INFORM", "FOOD")], ["SLOT_INFORM_NAME serves SLOT_INFORM_FOOD food .",
                                                "SLOT_INFORM_NAME is a SLOT_INFORM_FOOD restaurant ."]),
    ([("OFFER", "NAME"), ("INFORM", "FOOD")], ["SLOT_OFFER_NAME serves SLOT_INFORM_FOOD ."]),
    ([("INFORM", "NAME"), ("INFORM", "AREA")], ["SLOT_INFORM_NAME is in the SLOT_INFORM_AREA of town ."]),
    ([("INFORM", "NAME"), ("INFORM", "PRICERANGE")],
     ["SLOT_INFORM_NAME is in the SLOT_INFORM_PRICERANGE price range ."]),
    ([("INFORM", "NAME"), ("INFORM", "ADDR")], ["SLOT_INFORM_NAME is located at SLOT_INFORM_ADDR ."]),
    ([("INFORM", "NAME"), ("INFORM", "PHONE")],
     ["the phone number of SLOT_INFORM_NAME is SLOT_INFORM_PHONE ."]),
    ([("INFORM", "NAME"), ("INFORM", "FOOD"), ("INFORM", "AREA")],
     ["SLOT_INFORM_NAME serves SLOT_INFORM_FOOD food in the SLOT_INFORM_AREA ."]),
    ([("REQUEST", "FOOD")], ["what kind of food would you like ?"]),
    ([("REQUEST", "AREA")], ["which part of town are you looking for ?"]),
    ([("REQUEST", "PRICERANGE")], ["what price range do you want ?"]),
    ([("CANTHELP", "FOOD"), ("CANTHELP", "AREA")],
     ["sorry , there is no SLOT_CANTHELP_FOOD place in the SLOT_CANTHELP_AREA ."]),
    ([("EXPLICIT_CONFIRMATION", "FOOD")], ["you are looking for SLOT_EXPLICIT_CONFIRMATION_FOOD food , right ?"]),
]

_ARTICLE_TEMPLATES = [
    ([("OFFER", "NAME"), ("INFORM", "FOOD")], ["SLOT_OFFER_NAME serves {art} SLOT_INFORM_FOOD ."]),
    ([("INFORM", "NAME"), ("INFORM", "FOOD"), ("INFORM", "AREA")],
     ["SLOT_INFORM_NAME has {art} SLOT_INFORM_FOOD in the SLOT_INFORM_AREA ."]),
    ([("INFORM", "FOOD")], ["you can get {art} SLOT_INFORM_FOOD here ."]),
]

_VALUES = {"NAME": _NAMES, "AREA": _AREAS, "PRICERANGE": _PRICES, "FOOD": _FOODS,
           "PHONE": _PHONES, "ADDR": _ADDRS}

GRAMMARS = {"basic": _BASIC_TEMPLATES, "article": _ARTICLE_TEMPLATES}


def article_for(value_tokens):
    return "an" if value_tokens[0][0] in "aeiou" else "a"


def grammar_inventory(grammar_id):
    if grammar_id not in GRAMMARS:
        raise UnknownGrammar(grammar_id)
    seen = {}
    for pairs, _ in GRAMMARS[grammar_id]:
        for p in pairs:
            seen.setdefault(p, None)
    return Inventory(seen)


def synth_corpus(seed, size, grammar_id="basic"):
    """Template-generated corpus; deterministic for a given seed.

    The ``article`` grammar picks "a"/"an" in front of the food value by the
    value's first letter, so only models that read values can get it right.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if grammar_id not in GRAMMARS:
        raise UnknownGrammar(grammar_id)
    templates = GRAMMARS[grammar_id]
    inventory = grammar_inventory(grammar_id)
    rng = np.random.Generator(np.random.Philox(seed))
    examples = []
    for n in range(size):
        pairs, patterns = templates[rng.integers(len(templates))]
        acts = []
        for act, slot in pairs:
            if act in EMPTY_VALUE_ACTS:
                acts.append(DialogueAct(act, slot, ()))
                continue
            pool = _ARTICLE_FOODS if (grammar_id == "article" and slot == "FOOD") else _VALUES[slot]
            if act == "EXPLICIT_CONFIRMATION" and rng.random() < 0.25:
                value = "dontcare"
            else:
                value = pool[rng.integers(len(pool))]
            acts.append(DialogueAct(act, slot, value))
        mr = MeaningRepresentation(tuple(acts))
        pattern = patterns[rng.integers(len(patterns))]
        if "{art}" in pattern:
            food = next(a.value for a in acts if a.slot == "FOOD")
            pattern = pattern.format(art=article_for(food))
        delex = tuple(pattern.split())
        text = lexicalize(delex, mr)
        examples.append(Example(mr, text, delex, str(n)))
    return Dataset(tuple(examples), inventory, "train")
