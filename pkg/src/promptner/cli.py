"""Command-line surface: train, predict, evaluate, decode-scores,
gradcheck, synth-data.

All randomness flows from --seed; identical seeds produce identical
artifacts. Errors exit nonzero with a module-attributed message.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import checkpoint as ckpt
from . import data as data_mod
from .decoder import DecodeConfig, decode
from .encoder import EncoderConfig
from .errors import PromptnerError
from .evaluation import score as eval_score
from .gradcheck import model_gradcheck
from .model import Model, ModelConfig
from .tokenizer import build_vocab
from .trainer import TrainConfig, evaluate_dataset, fit


def _model_config_from_args(args, overrides=None):
    cfg = overrides or {}
    enc = EncoderConfig(depth=cfg.get("depth", 2), width=cfg.get("width", 64),
                        heads=cfg.get("heads", 4), ffn_mult=cfg.get("ffn_mult", 4),
                        max_positions=cfg.get("max_positions", 512),
                        dropout=cfg.get("encoder_dropout", 0.1))
    k = args.k if getattr(args, "k", None) is not None else cfg.get("k", 12)
    max_types = (args.max_types if getattr(args, "max_types", None) is not None
                 else cfg.get("max_types", 25))
    return ModelConfig(encoder=enc, k=k, head_dropout=cfg.get("head_dropout", 0.4),
                       max_types=max_types)


def _load_config_file(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_train(args):
    cfg = _load_config_file(args.config)
    train = data_mod.load_dataset(args.data)
    if not train:
        raise PromptnerError("trainer: dataset is empty")
    dev = data_mod.load_dataset(args.dev) if args.dev else None

    all_types = sorted({m.type for ex in train for m in ex.gold})
    vocab = build_vocab(data_mod.vocab_corpus(train, all_types),
                        max_size=cfg.get("vocab_size", 2000))
    mcfg = _model_config_from_args(args, cfg)
    model = Model.fresh(mcfg, vocab, seed=args.seed,
                        init_scale=cfg.get("init_scale", 0.02))

    tcfg = TrainConfig(
        steps=args.steps if args.steps is not None else cfg.get("steps", 2000),
        batch_size=cfg.get("batch_size", 8),
        lr_encoder=cfg.get("lr_encoder", 3e-4),
        lr_head=cfg.get("lr_head", 3e-4),
        weight_decay=cfg.get("weight_decay", 0.01),
        warmup_frac=cfg.get("warmup_frac", 0.1),
        neg_ratio=args.neg_ratio if args.neg_ratio is not None else cfg.get("neg_ratio", 0.5),
        drop_prob=args.drop_prob if args.drop_prob is not None else cfg.get("drop_prob", 0.2),
        reduction=cfg.get("reduction", "sum"),
        seed=args.seed,
        eval_every=cfg.get("eval_every", 0),
        log_every=cfg.get("log_every", 50),
        type_policy=cfg.get("type_policy", "sample"),
        shuffle_types=cfg.get("shuffle_types", True),
    )

    trace = fit(train, model, tcfg, dev=dev, dev_types=all_types,
                log=lambda rec: print(json.dumps(rec)))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for rec in trace:
                fh.write(json.dumps(rec) + "\n")

    ckpt.save_checkpoint(args.out, model, seeds=[args.seed])
    if dev:
        report = evaluate_dataset(model, dev, all_types)
        print(json.dumps({"dev_report": report.to_dict()}))
    return 0


def _decode_config(args):
    return DecodeConfig(mode=args.mode, threshold=args.threshold)


def cmd_predict(args):
    model, _ = ckpt.load_checkpoint(args.checkpoint)
    dcfg = _decode_config(args)
    if args.text is not None:
        if not args.types:
            raise PromptnerError("app: --text requires --types")
        sentences = [args.text.split()]
    else:
        if not args.data:
            raise PromptnerError("app: predict needs --data or --text")
        sentences = [ex.words for ex in data_mod.load_dataset(args.data)]
    if args.types:
        types = [t.strip() for t in args.types.split(",") if t.strip()]
    else:
        gold = data_mod.load_dataset(args.data)
        types = sorted({m.type for ex in gold for m in ex.gold})
    if not types:
        raise PromptnerError("app: no entity types to predict")

    predictions = [decode(model.score_table(words, types), dcfg) for words in sentences]
    if args.out:
        ckpt.save_mentions(predictions, args.out, words_lists=sentences)
    else:
        for words, mentions in zip(sentences, predictions):
            print(json.dumps({"tokenized_text": words,
                              "ner": [[m.start, m.end, m.type, m.score] for m in mentions]}))
    return 0


def cmd_evaluate(args):
    pred = ckpt.load_mentions(args.pred)
    gold = ckpt.load_mentions(args.gold)
    report = eval_score(pred, gold)
    line = json.dumps(report.to_dict())
    print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(line + "\n")
    return 0


def cmd_decode_scores(args):
    tables = ckpt.load_score_tables(args.scores)
    dcfg = _decode_config(args)
    mentions = [decode(t, dcfg) for t in tables]
    if args.out:
        ckpt.save_mentions(mentions, args.out)
    else:
        for ms in mentions:
            print(json.dumps({"ner": [[m.start, m.end, m.type, m.score] for m in ms]}))
    return 0


def cmd_gradcheck(args):
    failed = False
    for offset in range(args.seeds):
        for dtype, tol in ((np.float32, args.tol_f32), (np.float64, args.tol_f64)):
            errs = model_gradcheck(seed=args.seed + offset, dtype=dtype,
                                   samples_per_param=args.samples)
            worst = max(errs.values())
            for name in sorted(errs):
                print(f"seed={args.seed + offset} dtype={np.dtype(dtype).name} "
                      f"{name:32s} rel_err={errs[name]:.3e}")
            status = "ok" if worst < tol else "FAIL"
            print(f"seed={args.seed + offset} dtype={np.dtype(dtype).name} "
                  f"worst={worst:.3e} tol={tol:g} {status}")
            failed = failed or worst >= tol
    return 1 if failed else 0


def cmd_synth_data(args):
    spec = data_mod.SynthSpec(max_span_width=args.k if args.k is not None else 12)
    train, dev = data_mod.synth_dataset(spec, train_size=args.train_size,
                                        dev_size=args.dev_size, seed=args.seed)
    data_mod.save_dataset(train, args.train_out)
    data_mod.save_dataset(dev, args.dev_out)
    print(json.dumps({"train": args.train_out, "train_size": len(train),
                      "dev": args.dev_out, "dev_size": len(dev)}))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="promptner",
                                     description="Open-type span NER by prompt matching")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--dev")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--max-types", type=int, dest="max_types")
    p.add_argument("--neg-ratio", type=float, dest="neg_ratio")
    p.add_argument("--drop-prob", type=float, dest="drop_prob")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--trace", help="loss-trace JSONL path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="extract entities with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data")
    p.add_argument("--text")
    p.add_argument("--types", help="comma-separated entity types")
    p.add_argument("--mode", choices=["flat", "nested"], default="flat")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="exact-match F1 of predictions vs gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("decode-scores", help="run the decoder on an exported score table file")
    p.add_argument("--scores", required=True)
    p.add_argument("--mode", choices=["flat", "nested"], default="flat")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode_scores)

    p = sub.add_parser("gradcheck", help="finite-difference check of the default toy model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="number of seeds to run")
    p.add_argument("--samples", type=int, default=6, help="coordinates checked per tensor")
    p.add_argument("--tol-f32", type=float, default=1e-3, dest="tol_f32")
    p.add_argument("--tol-f64", type=float, default=1e-6, dest="tol_f64")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth-data", help="generate a synthetic dataset")
    p.add_argument("--train-out", required=True, dest="train_out")
    p.add_argument("--dev-out", required=True, dest="dev_out")
    p.add_argument("--train-size", type=int, default=50, dest="train_size")
    p.add_argument("--dev-size", type=int, default=20, dest="dev_size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_synth_data)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PromptnerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: app: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
