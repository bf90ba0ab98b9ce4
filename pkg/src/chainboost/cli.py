"""Command-line interface: train, evaluate, predict, inspect, mock-serve.

Runs are driven by a JSON config file; command-line flags override config
keys one to one, and the merged effective config lands in the run manifest
next to the model. Exit codes are a stable contract: 0 success, 2 config
or usage problem, 3 model/data incompatibility, 4 partial data failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, kernels
from .augment import perturbation_augmenter, remote_augmenter
from .boosting import BoostConfig, TrainingTelemetry, train
from .dataset import CORPUS_FORMATS, load_corpus
from .ensemble import EVAL_MODES, evaluate, recurrent_predictions
from .errors import (ChainboostError, CompatibilityError, ConfigError,
                     PartialDataError)
from .metrics import write_report
from .mockserver import BEHAVIORS, serve_forever
from .model_io import load_model, save_model
from .weights import entropy

BOOST_KEYS = ("k_max", "learner_kind", "chain_in_training", "replication",
              "holdout_fraction", "patience", "seed", "weighting",
              "binary_bound_form", "featurizer", "learner_params")

CONFIG_KEYS = set(BOOST_KEYS) | {"train_path", "format", "has_header",
                                 "output_dir", "augmenter"}

AUGMENTER_KEYS = {"kind", "dropout_rate", "swap_rate", "endpoint", "template", "timeout"}

OVERRIDE_FLAGS = ("k_max", "learner_kind", "chain_in_training", "replication",
                  "holdout_fraction", "patience", "seed", "weighting", "output_dir")


def load_run_config(path) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except ValueError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("train_path", "output_dir"):
        if key not in cfg:
            raise ConfigError(f"config is missing required key {key!r}")
    aug = cfg.get("augmenter", {})
    if not isinstance(aug, dict):
        raise ConfigError("augmenter must be an object")
    bad = set(aug) - AUGMENTER_KEYS
    if bad:
        raise ConfigError(f"unknown augmenter keys: {sorted(bad)}")
    return cfg


def build_augmenter(cfg: dict):
    kind = cfg.get("kind", "perturbation")
    if kind == "perturbation":
        return perturbation_augmenter(cfg.get("dropout_rate", 0.1),
                                      cfg.get("swap_rate", 0.1))
    if kind == "remote":
        if "endpoint" not in cfg:
            raise ConfigError("remote augmenter needs an 'endpoint'")
        return remote_augmenter(cfg["endpoint"],
                                cfg.get("template", "Paraphrase this {n} ways:\nINPUT: {text}"),
                                cfg.get("timeout", 10.0))
    raise ConfigError(f"unknown augmenter kind {kind!r}")


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    for key in OVERRIDE_FLAGS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    corpus = load_corpus(cfg["train_path"], cfg.get("format", "tsv"),
                         has_header=cfg.get("has_header", False))
    boost_cfg = BoostConfig(**{k: cfg[k] for k in BOOST_KEYS if k in cfg})
    augmenter = build_augmenter(cfg.get("augmenter", {}))

    model = train(corpus, boost_cfg, augmenter)

    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    model_path = os.path.join(outdir, "model.json")
    save_model(model, model_path)
    model.telemetry.write(os.path.join(outdir, "telemetry"))
    manifest = {
        "effective_config": {k: cfg[k] for k in sorted(cfg)},
        "kernel_backend": kernels.BACKEND,
        "package_version": __version__,
        "rounds_accepted": model.num_rounds,
        "stopped_reason": model.telemetry.stopped_reason,
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    tele = model.telemetry
    print(f"trained {model.num_rounds} round(s), stopped: {tele.stopped_reason}")
    if tele.best_round:
        # the model keeps rounds up to the best holdout score, so report
        # that round's accuracy, not the last (possibly stalled) one
        kept = tele.rounds[tele.best_round - 1]
        print(f"holdout accuracy {kept.holdout_accuracy:.4f}")
    print(f"model written to {model_path}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    corpus = load_corpus(args.data, args.format, has_header=args.has_header)
    rep = evaluate(model, corpus, mode=args.mode)
    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    write_report(rep,
                 os.path.join(outdir, f"report_{args.mode}.json"),
                 os.path.join(outdir, f"confusion_{args.mode}.csv"),
                 os.path.join(outdir, f"confusion_{args.mode}_normalized.csv"))
    print(f"accuracy {rep.accuracy:.4f}")
    print(f"macro_f1 {rep.macro_f1:.4f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    records = []
    bad_lines = []
    with open(args.input, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict) or not isinstance(rec.get("text"), str) \
                        or not rec["text"]:
                    raise ValueError("expected an object with a nonempty 'text' field")
            except ValueError as exc:
                bad_lines.append((lineno, str(exc).splitlines()[0]))
                continue
            records.append((rec.get("id", lineno), rec["text"]))

    names = model.label_map.names
    with open(args.output, "w", encoding="utf-8") as out:
        if records:
            texts = [t for _, t in records]
            results, per_round = recurrent_predictions(model, texts)
            for i, (rec_id, _) in enumerate(records):
                out.write(json.dumps({
                    "id": rec_id,
                    "predicted_label": names[results[i].label],
                    "scores": [float(s) for s in results[i].scores],
                    "per_round_labels": [names[labels[i]] for labels in per_round],
                }, sort_keys=True) + "\n")

    for lineno, message in bad_lines:
        print(f"error: line {lineno}: {message}", file=sys.stderr)
    if bad_lines:
        return 4
    return 0


def cmd_inspect(args) -> int:
    tele = TrainingTelemetry.read(args.telemetry_dir)
    print(f"{'round':>5} {'epsilon':>12} {'alpha':>12} {'z':>12} "
          f"{'train_loss':>12} {'holdout_acc':>12}")
    for r in tele.rounds:
        acc = f"{r.holdout_accuracy:.4f}" if r.holdout_accuracy is not None else "-"
        print(f"{r.round_index:>5} {r.epsilon:>12.6f} {r.alpha:>12.6f} "
              f"{r.z:>12.6f} {r.train_loss:>12.4f} {acc:>12}")
    if tele.snapshots:
        print()
        print(f"{'round':>5} {'max_weight':>12} {'entropy':>12}")
        for k, snap in enumerate(tele.snapshots):
            print(f"{k:>5} {snap.values.max():>12.6f} {entropy(snap):>12.6f}")
    return 0


def cmd_mock_serve(args) -> int:
    labels = tuple(name for name in args.labels.split(",") if name)
    return serve_forever(args.behavior, labels, args.constant_text, args.port)


def _add_train_parser(sub):
    p = sub.add_parser("train", help="train an ensemble from a JSON run config")
    p.add_argument("config", help="path to the run config (JSON)")
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--learner-kind", dest="learner_kind", default=None)
    p.add_argument("--chain-in-training", dest="chain_in_training", default=None,
                   action=argparse.BooleanOptionalAction)
    p.add_argument("--replication", type=float, default=None)
    p.add_argument("--holdout-fraction", dest="holdout_fraction", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--weighting", choices=("materialize", "direct"), default=None)
    p.add_argument("--output-dir", dest="output_dir", default=None)
    p.set_defaults(func=cmd_train)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainboost",
        description="Adaptive boosting for text classification with chained inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_train_parser(sub)

    p = sub.add_parser("evaluate", help="score a model on a labeled corpus")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--format", choices=CORPUS_FORMATS, default="tsv")
    p.add_argument("--has-header", dest="has_header", action="store_true")
    p.add_argument("--mode", choices=EVAL_MODES, default="recurrent")
    p.add_argument("--output-dir", dest="output_dir", default=".")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="batch-predict a JSONL file of {id, text}")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="print per-round telemetry and weight summary")
    p.add_argument("telemetry_dir")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("mock-serve", help="run the scripted mock completion endpoint")
    p.add_argument("--behavior", choices=BEHAVIORS, default="echo")
    p.add_argument("--labels", default="", help="comma-separated label names (echo/flaky)")
    p.add_argument("--constant-text", dest="constant_text", default="")
    p.add_argument("--port", type=int, default=8099)
    p.set_defaults(func=cmd_mock_serve)

    return parser


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 2
    except CompatibilityError as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 3
    except PartialDataError as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 4
    except ChainboostError as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
