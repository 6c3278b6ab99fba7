"""Command line: synth-data, train, pretrain, transfer-train, generate, evaluate, gradcheck."""

import argparse
import json
import logging
import os
import sys

from ldsclstm import __version__
from ldsclstm.config import Config, apply_overrides, load_config, save_config
from ldsclstm.corpus import (build_vocabulary, detokenize, load_dataset, load_mrs, save_dataset,
                             split_train_valid, synth_corpus)
from ldsclstm.generation import GenerationConfig, format_nbest, generate_nbest, warn_unbound
from ldsclstm.gradcheck import gradient_check
from ldsclstm.metrics import evaluate_corpus, evaluate_outputs
from ldsclstm.model import LdScLstm
from ldsclstm.pretrain import (KEYWORDS, SentenceAutoencoder, read_sentences,
                               select_pretraining_sentences, train_autoencoder, transfer_weights)
from ldsclstm.training import train

log = logging.getLogger("ldsclstm")

GRADCHECK_TOLERANCE = 1e-4


def setup_logging():
    level = os.environ.get("LDSC_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def resolve_config(args):
    cfg = load_config(args.config) if args.config else Config()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _require(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _write_history(path, history):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\ttrain_loss\tvalid_loss\n")
        for row in history:
            fh.write(f"{row['epoch']}\t{row['train']:.6f}\t{row['monitor']:.6f}\n")


def _train_model(cfg, args, params_hook=None):
    train_set = load_dataset(_require(args.train), max_acts=cfg.max_acts)
    if args.valid:
        valid_set = load_dataset(_require(args.valid), inventory=train_set.inventory, tag="valid",
                                 max_acts=cfg.max_acts)
    else:
        train_set, valid_set = split_train_valid(train_set, cfg.valid_fraction, cfg.seed)
    vocab = build_vocabulary(train_set, cfg.min_count)
    model = LdScLstm(vocab, train_set.inventory, cfg)
    if params_hook is not None:
        model.params = params_hook(model.params)
    history = train(model, train_set.examples, valid_set.examples or None)
    model.save(_out(args, "model.ckpt"))
    _write_history(_out(args, "train_log.tsv"), history)
    save_config(cfg, _out(args, "config.txt"))
    log.info("saved %s", _out(args, "model.ckpt"))
    return model


def cmd_synth_data(cfg, args):
    train_set = synth_corpus(cfg.seed, args.size, args.grammar)
    save_dataset(train_set, _out(args, "train.jsonl"))
    if args.test_size:
        test_set = synth_corpus(cfg.seed + 1_000_003, args.test_size, args.grammar)
        save_dataset(test_set, _out(args, "test.jsonl"))
    print(json.dumps(train_set.statistics()))
    return 0


def cmd_train(cfg, args):
    _train_model(cfg, args)
    return 0


def _pretrain(cfg, args):
    sentences = select_pretraining_sentences(read_sentences(_require(args.sentences)), KEYWORDS,
                                             cfg.pretrain_k)
    ae = train_autoencoder(sentences, cfg, seed=cfg.seed)
    ae.save(_out(args, "ae.ckpt"))
    log.info("saved %s", _out(args, "ae.ckpt"))
    return ae


def cmd_pretrain(cfg, args):
    _pretrain(cfg, args)
    return 0


def cmd_transfer_train(cfg, args):
    if args.autoencoder:
        ae = SentenceAutoencoder.load(_require(args.autoencoder))
    else:
        ae = _pretrain(cfg, args)
    _train_model(cfg, args, params_hook=lambda params: transfer_weights(ae.params, params))
    return 0


def _generate(model, mrs, args, cfg):
    gen_cfg = GenerationConfig.from_config(cfg)
    best, nbest_lines = [], []
    for n, mr in enumerate(mrs):
        nbest = generate_nbest(model, mr, gen_cfg)
        warn_unbound(nbest[0][1])
        best.append(nbest[0][1])
        nbest_lines.extend(f"{n}\t{line}" for line in format_nbest(nbest))
    with open(_out(args, "outputs.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(detokenize(tokens) + "\n" for tokens in best)
    with open(_out(args, "nbest.tsv"), "w", encoding="utf-8") as fh:
        fh.write("mr\trank\tscore\tlogprob\terr\ttext\n")
        fh.writelines(line + "\n" for line in nbest_lines)
    return best


def _decoding_config(model, cfg):
    # decoding settings come from the command line / config file, the rest from the checkpoint
    keys = ("beam_width", "max_len", "err_lambda")
    return model.cfg.replace(**{k: getattr(cfg, k) for k in keys})


def cmd_generate(cfg, args):
    model = LdScLstm.load(_require(args.checkpoint))
    mrs = load_mrs(_require(args.input), model.inventory)
    _generate(model, mrs, args, _decoding_config(model, cfg))
    return 0


def cmd_evaluate(cfg, args):
    if args.outputs:
        test_set = load_dataset(_require(args.test), tag="test")
        report = evaluate_corpus(_require(args.outputs), test_set)
    else:
        model = LdScLstm.load(_require(args.checkpoint))
        test_set = load_dataset(_require(args.test), inventory=model.inventory, tag="test")
        best = _generate(model, [ex.mr for ex in test_set], args, _decoding_config(model, cfg))
        report = evaluate_outputs([(None, tokens) for tokens in best], test_set)
    with open(_out(args, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.table())
    with open(_out(args, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    print(report.table(), end="")
    return 0


def cmd_gradcheck(cfg, args):
    err = gradient_check(cfg.seed, args.instances)
    ok = err <= GRADCHECK_TOLERANCE
    print(f"max relative error {err:.3e} over {args.instances} instance(s): {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="ldsc", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", parents=[common], help="write a synthetic corpus")
    p.add_argument("--size", type=int, default=100)
    p.add_argument("--test-size", type=int, default=0)
    p.add_argument("--grammar", default="basic")
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", parents=[common], help="train an ld-sc-LSTM")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pretrain", parents=[common], help="train the sentence autoencoder")
    p.add_argument("--sentences", required=True)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("transfer-train", parents=[common],
                       help="pretrain, transfer recurrent weights, then train")
    p.add_argument("--sentences")
    p.add_argument("--autoencoder", help="reuse an existing ae.ckpt instead of pretraining")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.set_defaults(func=cmd_transfer_train)

    p = sub.add_parser("generate", parents=[common], help="decode meaning representations")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="JSON-lines file of meaning representations")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", parents=[common], help="BLEU-4 / ROUGE-L / CIDEr / ERR report")
    p.add_argument("--checkpoint")
    p.add_argument("--test", required=True)
    p.add_argument("--outputs", help="score this outputs file instead of generating")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", parents=[common], help="compare BPTT with finite differences")
    p.add_argument("--instances", type=int, default=1)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "transfer-train" and not (args.sentences or args.autoencoder):
        parser.error("transfer-train needs --sentences or --autoencoder")
    if args.command == "evaluate" and not (args.outputs or args.checkpoint):
        parser.error("evaluate needs --checkpoint or --outputs")
    cfg = resolve_config(args)
    return args.func(cfg, args)


if __name__ == "__main__":
    sys.exit(main())
