"""Regenerate restaurant_test.jsonl: a restaurant-domain test set (211 sentences, 2033 words, 286 word types).

    python tests/data/make_restaurant_test.py
"""

import os
import random

from ldsclstm.corpus import (Dataset, DialogueAct, Example, Inventory, MeaningRepresentation,
                             lexicalize, save_dataset)

SENTENCES, WORDS, VOCAB = 211, 2033, 286

STREETS = ["queen street", "mill road", "market hill", "kings parade", "regent street",
           "hills road", "castle street", "bridge street", "trumpington road", "newmarket road"]
NAMES = ["super ramen", "golden wok", "bella italia", "little seoul", "river bar", "the gardenia",
         "saigon city", "royal spice", "the eagle", "copper kettle", "pizza hut", "yippee noodle bar",
         "curry garden", "the lucky star", "hotel du vin", "midsummer house", "cote", "loch fyne",
         "the slug and lettuce", "charlie chan", "rice house", "da vinci pizzeria", "ask", "zizzi",
         "the nirala", "meghna", "kohinoor", "sala thong", "bangkok city", "j restaurant",
         "the oak bistro", "wagamama", "nandos", "frankie and bennys", "efes", "anatolia",
         "la margherita", "la mimosa", "prezzo", "tang chinese", "dojo noodle bar", "shanghai family"]
FOODS = ["pizza", "sushi", "japanese", "chinese", "indian", "italian", "thai", "french", "korean",
         "spanish", "british", "seafood", "vietnamese", "turkish", "lebanese", "dontcare"]
AREAS = ["north", "south", "centre", "east", "west", "dontcare"]
PRICES = ["cheap", "moderate", "expensive", "under 30 dollars", "dontcare"]

TEMPLATES = [
    ([("OFFER", "NAME"), ("INFORM", "FOOD")], "SLOT_OFFER_NAME serves SLOT_INFORM_FOOD food ."),
    ([("INFORM", "FOOD"), ("INFORM", "ADDR")], "i am searching for SLOT_INFORM_FOOD places near SLOT_INFORM_ADDR"),
    ([("INFORM", "NAME"), ("INFORM", "ADDR")], "SLOT_INFORM_NAME is located at SLOT_INFORM_ADDR ."),
    ([("INFORM", "NAME"), ("INFORM", "PHONE")], "the phone number of SLOT_INFORM_NAME is SLOT_INFORM_PHONE ."),
    ([("INFORM", "NAME"), ("INFORM", "POSTCODE")], "the postcode of SLOT_INFORM_NAME is SLOT_INFORM_POSTCODE ."),
    ([("INFORM", "NAME"), ("INFORM", "AREA")], "SLOT_INFORM_NAME is in the SLOT_INFORM_AREA part of town ."),
    ([("CANTHELP", "FOOD"), ("CANTHELP", "PRICERANGE")],
     "i'm sorry but there is no SLOT_CANTHELP_FOOD restaurant for SLOT_CANTHELP_PRICERANGE ."),
    ([("EXPLICIT_CONFIRMATION", "FOOD")], "you are looking for a SLOT_EXPLICIT_CONFIRMATION_FOOD restaurant right ?"),
    ([("IMPLICIT_CONFIRMATION", "AREA")], "ok , a place in the SLOT_IMPLICIT_CONFIRMATION_AREA ."),
    ([("REQUEST", "FOOD")], "what kind of food would you like ?"),
    ([("REQUEST", "PRICERANGE")], "what is your price range ?"),
    ([("REQUEST", "AREA")], "which area do you prefer ?"),
    ([("INFORM", "NAME"), ("INFORM", "PRICERANGE")], "SLOT_INFORM_NAME is SLOT_INFORM_PRICERANGE ."),
    ([("OFFER", "NAME"), ("INFORM", "FOOD"), ("INFORM", "AREA"), ("INFORM", "PRICERANGE")],
     "SLOT_OFFER_NAME is a nice SLOT_INFORM_FOOD restaurant in the SLOT_INFORM_AREA of town "
     "and the prices are SLOT_INFORM_PRICERANGE ."),
    ([("OFFER", "NAME"), ("INFORM", "ADDR"), ("INFORM", "PHONE")],
     "you can find SLOT_OFFER_NAME at SLOT_INFORM_ADDR and their phone number is SLOT_INFORM_PHONE ."),
]


def _value(rng, slot, fresh):
    if slot == "NAME":
        return rng.choice(NAMES)
    if slot == "FOOD":
        return rng.choice(FOODS)
    if slot == "AREA":
        return rng.choice(AREAS)
    if slot == "PRICERANGE":
        return rng.choice(PRICES)
    if slot == "ADDR":
        return f"{fresh()} {rng.choice(STREETS)}"
    if slot == "PHONE":
        return f"01223 {fresh()}"
    if slot == "POSTCODE":
        return f"cb{rng.randint(1, 5)} {fresh()}"
    raise KeyError(slot)


def _example(rng, template, fresh, n):
    pairs, pattern = template
    acts = [DialogueAct(a, s, () if a == "REQUEST" else _value(rng, s, fresh)) for a, s in pairs]
    mr = MeaningRepresentation(tuple(acts))
    delex = tuple(pattern.split())
    return Example(mr, lexicalize(delex, mr), delex, str(n))


def build(seed, tries=60):
    rng = random.Random(seed)
    examples, vocab, words = [], set(), 0
    for n in range(SENTENCES):
        left = SENTENCES - n
        want_words = (WORDS - words) / left
        want_new = (VOCAB - len(vocab)) / left
        best = None
        for _ in range(tries if left > 1 else 50 * tries):
            allow_new = len(vocab) < VOCAB
            # fresh numbers only while the vocabulary still needs them
            fresh = (lambda: str(rng.randint(1000, 9999))) if allow_new else (
                lambda: rng.choice(sorted(v for v in vocab if v.isdigit())))
            ex = _example(rng, rng.choice(TEMPLATES), fresh, n)
            new_vocab = vocab | set(ex.text)
            remaining = WORDS - words - len(ex.text)
            if len(new_vocab) > VOCAB or not 5 * (left - 1) <= remaining <= 20 * (left - 1):
                continue
            if left == 1 and len(new_vocab) != VOCAB:
                continue
            cost = abs(len(ex.text) - want_words) + 2 * abs(len(new_vocab) - len(vocab) - want_new)
            if best is None or cost < best[0]:
                best = (cost, ex, new_vocab)
        if best is None:
            return None
        _, ex, vocab = best
        examples.append(ex)
        words += len(ex.text)
    return examples


def main():
    pairs = {}
    examples = None
    for seed in range(1000):
        examples = build(seed)
        if examples:
            break
    for tmpl_pairs, _ in TEMPLATES:
        for p in tmpl_pairs:
            pairs.setdefault(p, None)
    ds = Dataset(tuple(examples), Inventory(pairs), "test")
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "restaurant_test.jsonl")
    save_dataset(ds, path)
    print(seed, ds.statistics())


if __name__ == "__main__":
    main()
