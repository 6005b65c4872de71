"""Command-line entry point.

Subcommands: train, eval, predict, synth, gradcheck. Flags can be preloaded
from a JSON config file (--config); explicit flags win over the file. The
NEURULES_LOG environment variable sets log verbosity (debug/info/warning).

Exit codes: 0 success, 2 invalid input, 3 training aborted (non-finite
loss). gradcheck exits 1 when the worst relative error reaches 1e-4.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import evaluation, extraction, synthetic
from .rulelist import model_from_doc, model_to_doc
from .training import TrainConfig, TrainingDiverged, gradient_check, train

log = logging.getLogger("neurules")

GRADCHECK_LIMIT = 1e-4


class InputError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("NEURULES_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config_overlay(args: argparse.Namespace, parser: argparse.ArgumentParser,
                         argv: list[str]) -> argparse.Namespace:
    """Fill unset flags from --config JSON; explicit flags take precedence."""
    if not getattr(args, "config", None):
        return args
    try:
        overlay = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read config file {args.config}: {e}")
    if not isinstance(overlay, dict):
        raise InputError("config file must hold a JSON object")
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in overlay.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"unknown config key {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        epochs=int(args.epochs), batch_size=int(args.batch_size),
        learning_rate=float(args.lr), lam=float(getattr(args, "lambda")),
        cov_min=float(args.cov_min), cov_max=float(args.cov_max),
        epsilon=float(args.epsilon), seed=int(args.seed))


def cmd_train(args: argparse.Namespace) -> int:
    ds = data_mod.load_csv(args.data, args.label)
    config = _train_config(args)
    model, report = train(ds, config, k=int(args.rules), threads=int(args.threads))
    rl = extraction.extract(model, ds, weight_threshold=float(args.weight_threshold))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = model_to_doc(model, ds.features, ds.labels, ds.label_column,
                       config_echo={
                           "epochs": config.epochs, "batch_size": config.batch_size,
                           "learning_rate": config.learning_rate, "lambda": config.lam,
                           "cov_min": config.cov_min, "cov_max": config.cov_max,
                           "epsilon": config.epsilon, "seed": config.seed,
                           "rules": int(args.rules),
                           "weight_threshold": float(args.weight_threshold),
                       })
    doc["rule_list"] = rl.to_doc()
    (out / "model.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    text = extraction.render_text(rl)
    (out / "rules.txt").write_text(text)
    (out / "report.csv").write_text(report.to_csv())
    print(text, end="")
    return 0


def _load_rulelist(path: Path) -> extraction.HardRuleList:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read model file {path}: {e}")
    fmt = doc.get("format")
    if fmt == extraction.RULELIST_FORMAT:
        return extraction.HardRuleList.from_doc(doc)
    if fmt == "neurules-model/1":
        if "rule_list" not in doc:
            raise InputError(f"{path} carries no extracted rule list")
        return extraction.HardRuleList.from_doc(doc["rule_list"])
    raise InputError(f"unsupported format {fmt!r} in {path}")


def cmd_eval(args: argparse.Namespace) -> int:
    rl = _load_rulelist(Path(args.model))
    X, y, dropped = data_mod.encode_with_meta(args.data, rl.features, rl.labels,
                                              rl.label_column)
    if dropped:
        log.warning("dropped %d rows with missing cells", dropped)
    report = evaluation.evaluate(rl, X, y)
    print(report.to_csv(), end="")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    rl = _load_rulelist(Path(args.model))
    X, y, _ = data_mod.encode_with_meta(args.data, rl.features, rl.labels,
                                        rl.label_column)
    pred, fired = rl.predict(X)
    print("row,predicted,rule")
    for i in range(len(pred)):
        which = str(fired[i]) if fired[i] < len(rl.rules) else "default"
        print(f"{i},{rl.labels[pred[i]]},{which}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = synthetic.SyntheticSpec(d=int(args.d), n=int(args.n), s=float(args.s),
                                   k=int(args.k), m=int(args.m), seed=int(args.seed))
    ds, ground_truth = synthetic.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "synthetic.csv").write_text(synthetic.to_csv(ds))
    (out / "ground_truth.txt").write_text(extraction.render_text(ground_truth))
    print(extraction.render_text(ground_truth), end="")
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    config = TrainConfig(seed=int(args.seed), epsilon=float(args.epsilon))
    worst = gradient_check((int(args.d), int(args.k), 2), config,
                           n_probes=int(args.probes))
    print(f"max relative error over {args.probes} probes: {worst:.3e}")
    return 0 if worst < GRADCHECK_LIMIT else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurules",
        description="Learn interpretable if/else-if rule lists by continuous "
                    "optimization and extract them as crisp rules.")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train on a CSV and write model, rules, report")
    tr.add_argument("--data", required=True, help="training CSV (header row required)")
    tr.add_argument("--label", required=True, help="name of the label column")
    tr.add_argument("--rules", type=int, default=10, help="rule budget k incl. default")
    tr.add_argument("--epochs", type=int, default=500)
    tr.add_argument("--batch-size", type=int, default=256)
    tr.add_argument("--lr", type=float, default=0.025, help="Adam learning rate")
    tr.add_argument("--lambda", type=float, default=0.5, dest="lambda",
                    help="support regularizer weight")
    tr.add_argument("--cov-min", type=float, default=0.1)
    tr.add_argument("--cov-max", type=float, default=0.9)
    tr.add_argument("--epsilon", type=float, default=0.05, help="conjunction slack")
    tr.add_argument("--weight-threshold", type=float, default=0.01,
                    help="minimum conjunction weight kept at extraction")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--threads", type=int, default=1,
                    help="minibatch gradient chunks computed in parallel")
    tr.add_argument("--config", help="JSON file with the same keys as the flags")
    tr.add_argument("--out", required=True, help="output directory")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a trained rule list on a CSV")
    ev.add_argument("--model", required=True, help="model.json or rule-list JSON")
    ev.add_argument("--data", required=True)
    ev.set_defaults(func=cmd_eval)

    pr = sub.add_parser("predict", help="per-row class and fired rule")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.set_defaults(func=cmd_predict)

    sy = sub.add_parser("synth", help="generate ground-truth rule-list data")
    sy.add_argument("--d", type=int, default=20, help="feature count")
    sy.add_argument("--n", type=int, default=5000, help="sample count")
    sy.add_argument("--s", type=float, default=0.1, help="target rule coverage")
    sy.add_argument("--k", type=int, default=2, help="number of rules")
    sy.add_argument("--m", type=int, default=2, help="predicates per rule")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out", required=True, help="output directory")
    sy.set_defaults(func=cmd_synth)

    gc = sub.add_parser("gradcheck",
                        help="analytic gradients vs central finite differences")
    gc.add_argument("--probes", type=int, default=1000)
    gc.add_argument("--d", type=int, default=10, help="max feature count")
    gc.add_argument("--k", type=int, default=5, help="max rule count")
    gc.add_argument("--epsilon", type=float, default=0.05)
    gc.add_argument("--seed", type=int, default=0)
    gc.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _load_config_overlay(args, parser, argv)
        return args.func(args)
    except (InputError, data_mod.DataError, extraction.ExtractionError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TrainingDiverged as e:
        print(f"training aborted: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
