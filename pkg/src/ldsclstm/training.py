"""Minibatch Adam training with validation early stopping."""

import logging
import math

from ldsclstm.numerics import Rng, adam_step

log = logging.getLogger(__name__)


def snapshot(params):
    return {k: p.value.copy() for k, p in params.items()}


def restore(params, values):
    for k, v in values.items():
        params[k].value[...] = v


def mean_loss(model, examples, batch_size=64):
    total = 0.0
    for start in range(0, len(examples), batch_size):
        total += model.loss(examples[start:start + batch_size])
    return total / len(examples)


def train(model, train_examples, valid_examples=None, epochs=None, seed=None, lr=None,
          batch_size=None, patience=None, callback=None):
    """Train ``model`` in place and return the per-epoch history.

    Each epoch shuffles the training set, and every minibatch takes one Adam
    step on the batch-averaged gradient. The parameters with the lowest
    validation loss (training loss if there is no validation set) are kept.
    Training stops after ``patience`` epochs without improvement.
    """
    cfg = model.cfg
    epochs = cfg.epochs if epochs is None else epochs
    lr = cfg.learning_rate if lr is None else lr
    batch_size = cfg.batch_size if batch_size is None else batch_size
    patience = cfg.patience if patience is None else patience
    rng = Rng(cfg.seed if seed is None else seed)
    shuffle_rng, drop_rng = rng.split(2)
    train_examples = list(train_examples)
    valid_examples = list(valid_examples) if valid_examples else None
    monitor = valid_examples or train_examples

    best = mean_loss(model, monitor)
    best_params = snapshot(model.params)
    history = [{"epoch": 0, "train": mean_loss(model, train_examples), "monitor": best}]
    log.info("epoch 0: monitor loss %.4f", best)
    stale = 0
    for epoch in range(1, epochs + 1):
        order = shuffle_rng.permutation(len(train_examples))
        total = 0.0
        for start in range(0, len(order), batch_size):
            batch = [train_examples[i] for i in order[start:start + batch_size]]
            model.params.zero_grad()
            total += model.loss_and_grad(batch, rng=drop_rng)
            adam_step(model.params, lr)
        train_loss = total / len(train_examples)
        current = mean_loss(model, monitor)
        history.append({"epoch": epoch, "train": train_loss, "monitor": current})
        log.info("epoch %d: train %.4f monitor %.4f", epoch, train_loss, current)
        if callback is not None:
            callback(epoch, model)
        if not math.isfinite(current):
            log.warning("monitor loss is not finite; stopping")
            break
        if current < best:
            best, best_params, stale = current, snapshot(model.params), 0
        else:
            stale += 1
            if stale >= patience:
                log.info("no improvement for %d epochs; stopping", patience)
                break
    restore(model.params, best_params)
    model.params.zero_grad()
    return history
