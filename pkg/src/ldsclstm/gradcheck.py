"""Random small ld-sc-LSTM instances and analytic-vs-finite-difference comparison."""

from ldsclstm.config import Config
from ldsclstm.corpus import (RESERVED, DialogueAct, Example, Inventory, MeaningRepresentation,
                             Vocabulary)
from ldsclstm.model import LdScLstm
from ldsclstm.numerics import Rng, finite_diff_grad, max_relative_error


def random_instance(seed, max_D=3, max_E=4, max_H=5, max_V=8, max_M=3, max_T=4, batch=2,
                    weight_scale=0.5):
    """A model with random weights plus a small batch of random examples."""
    rng = Rng(seed)
    D = 1 + int(rng.integers(max_D))
    inventory = Inventory([("INFORM", f"S{j}") for j in range(D)])
    n_words = max(1, max_V - len(RESERVED) - D)
    words = [f"w{j}" for j in range(n_words)]
    vocab = Vocabulary(list(RESERVED) + inventory.placeholders() + words)
    cfg = Config(embedding_dim=1 + int(rng.integers(max_E)), encoder_hidden=1 + int(rng.integers(max_H)),
                 decoder_hidden=1 + int(rng.integers(max_H)), dropout=0.0, seed=seed)
    model = LdScLstm(vocab, inventory, cfg, seed=seed)
    for p in model.params.values():
        p.value[...] = rng.uniform(-weight_scale, weight_scale, p.shape)
    outputs = words + inventory.placeholders()
    examples = []
    for _ in range(batch):
        acts = []
        for _ in range(1 + int(rng.integers(max_M))):
            j = int(rng.integers(D))
            value = [words[int(i)] for i in rng.integers(len(words), size=int(rng.integers(3)))]
            acts.append(DialogueAct("INFORM", f"S{j}", value))
        mr = MeaningRepresentation(tuple(acts))
        T = 1 + int(rng.integers(max_T))
        delex = tuple(outputs[int(i)] for i in rng.integers(len(outputs), size=T - 1))
        examples.append(Example(mr, delex, delex))
    return model, examples


def check_model(model, examples, h=1e-5):
    """Max relative error between BPTT gradients and central differences of the summed loss."""
    model.params.zero_grad()
    model.loss_and_grad(examples, average=False)
    analytic = {k: p.grad.copy() for k, p in model.params.items()}
    numeric = finite_diff_grad(lambda: model.loss(examples), model.params, h=h)
    model.params.zero_grad()
    return max_relative_error(analytic, numeric)


def gradient_check(seed=0, instances=1, **dims):
    return max(check_model(*random_instance(seed + n, **dims)) for n in range(instances))
