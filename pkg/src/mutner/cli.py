"""Command-line interface: convert, expand, train, predict, evaluate, ensemble-check."""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

from .conll import ConllError, format_conll, read_conll
from .corpus_io import PubTatorError, load_alias_table, parse_pubtator, split_sentences
from .crf import train_crf
from .encoding import EncoderConfig
from .ensemble import majority_vote
from .evaluation import emit_report, exact_match_prf
from .expansion import build_dictionary, expand
from .optim import TrainConfig
from .pipeline import PATTERNS, load_model, pattern_of, predict_bio, predict_ensemble
from .span import SpanDecodeConfig, train_span
from .tagging import TagScheme, tags_to_spans

logger = logging.getLogger("mutner")

MODES = ("raw", "ensemble", "expanded", "expanded+ensemble")

DEFAULTS = {
    "seed": 42,
    "mode": "raw",
    "alias_table": None,
    "encoder": {"kind": "orthographic", "hash_bits": 18, "sidecar": None, "dim": None, "seed": 0},
    "train": {"learning_rate": None, "epochs": 100, "batch_size": 24, "weight_decay": 0.01,
              "patience": 5, "dropout": 0.0},
    "span": {"max_span_length": 20},
    "report": {"dataset": None, "model": None},
}


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def _merge(base: dict, override: dict, path: str = "") -> None:
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise CliError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise CliError(f"configuration key {where!r} must be an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_run_config(config_path: str | None, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if config_path:
        try:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {config_path}: {exc}") from None
        _merge(cfg, data)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--set expects key=value, got {item!r}")
        nested: dict = {}
        cur = nested
        parts = key.strip().split(".")
        for p in parts[:-1]:
            cur = cur.setdefault(p, {})
        cur[parts[-1]] = _parse_value(value)
        _merge(cfg, nested)
    if cfg["mode"] not in MODES:
        raise CliError(f"mode must be one of {', '.join(MODES)}")
    return cfg


def encoder_config(cfg: dict) -> EncoderConfig:
    try:
        return EncoderConfig(**cfg["encoder"])
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad encoder configuration: {exc}") from None


def train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(seed=cfg["seed"], **cfg["train"])
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad train configuration: {exc}") from None


def echo_config(out: str, command: str, cfg: dict, args: dict) -> None:
    payload = {"command": command, "args": args, "config": cfg}
    Path(out).with_suffix(".config.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                                     encoding="utf-8")


# ---------------------------------------------------------------------------
# data loading


def _looks_like_conll(path: str) -> bool:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            if line.startswith("# doc"):
                return True
            return "|t|" not in line
    return True


def load_sentences(path: str, cfg: dict, strict: bool = True):
    """Sentences from a token/tag file or a PubTator file (sniffed)."""
    try:
        if _looks_like_conll(path):
            return [c.sentence for c in read_conll(path)]
        aliases = load_alias_table(cfg["alias_table"])
        diagnostics = []
        with open(path, encoding="utf-8") as fh:
            docs = parse_pubtator(fh, aliases, diagnostics)
        sentences = [s for d in docs for s in split_sentences(d, diagnostics=diagnostics)]
    except (OSError, ConllError, PubTatorError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None
    errors = [d for d in diagnostics if d.level == "error"]
    if errors and strict:
        raise CliError(f"{path}: {len(errors)} annotation error(s); first: {errors[0]}")
    return sentences


# ---------------------------------------------------------------------------
# subcommands


def cmd_convert(args, cfg) -> int:
    aliases = load_alias_table(cfg["alias_table"])
    diagnostics = []
    try:
        with open(args.input, encoding="utf-8") as fh:
            docs = parse_pubtator(fh, aliases, diagnostics)
    except PubTatorError as exc:
        raise CliError(f"{args.input}: {exc}") from None
    sentences = [s for d in docs for s in split_sentences(d, diagnostics=diagnostics)]
    Path(args.output).write_text(format_conll(sentences), encoding="utf-8")
    echo_config(args.output, "convert", cfg, {"input": args.input, "output": args.output})
    for d in diagnostics:
        print(str(d), file=sys.stderr)
    return 1 if any(d.level == "error" for d in diagnostics) else 0


def cmd_expand(args, cfg) -> int:
    corpora = [load_sentences(p, cfg) for p in args.corpora]
    names = [Path(p).stem for p in args.corpora]
    if len(set(names)) != len(names):
        names = [f"{i}:{n}" for i, n in enumerate(names)]
    dictionary = build_dictionary(corpora)
    expanded = expand(corpora, dictionary, names)
    out = Path(args.output)
    out.write_text(format_conll(expanded.sentences), encoding="utf-8")
    dictionary.save(out.with_suffix(".dict.tsv"))
    out.with_suffix(".stats.json").write_text(json.dumps(expanded.stats_dict(), indent=2, sort_keys=True) + "\n",
                                              encoding="utf-8")
    echo_config(args.output, "expand", cfg, {"corpora": args.corpora, "output": args.output})
    return 0


def cmd_train(args, cfg) -> int:
    corpora = [load_sentences(p, cfg) for p in args.data]
    if cfg["mode"].startswith("expanded"):
        dataset = expand(corpora, build_dictionary(corpora)).sentences
    else:
        dataset = [s for c in corpora for s in c]
    dev = load_sentences(args.dev, cfg) if args.dev else None
    if not dataset:
        raise CliError("training data is empty")
    enc, tc = encoder_config(cfg), train_config(cfg)
    if args.pattern == "span":
        model = train_span(dataset, enc, tc, SpanDecodeConfig(cfg["span"]["max_span_length"]), dev=dev)
    else:
        scheme = TagScheme.BIO if args.pattern == "crf-bio" else TagScheme.BMEO
        model = train_crf(dataset, enc, tc, scheme, dev=dev)
    model.save(args.output)
    echo_config(args.output, "train", cfg,
                {"pattern": args.pattern, "data": args.data, "dev": args.dev, "output": args.output})
    return 0


def cmd_predict(args, cfg) -> int:
    mode = args.mode or cfg["mode"]
    if mode not in MODES:
        raise CliError(f"mode must be one of {', '.join(MODES)}")
    try:
        models = [load_model(p) for p in args.models]
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load model: {exc}") from None
    sentences = load_sentences(args.data, cfg)
    override = encoder_config(cfg) if cfg["encoder"]["kind"] == "embedding_file" else None
    try:
        if mode.endswith("ensemble"):
            preds, singles = predict_ensemble(models, sentences, override)
            if args.keep_single:
                keep = Path(args.keep_single)
                keep.mkdir(parents=True, exist_ok=True)
                for p in PATTERNS:
                    (keep / f"{p}.conll").write_text(format_conll(sentences, singles[p]), encoding="utf-8")
        else:
            if len(models) != 1:
                raise CliError(f"mode {mode} needs exactly one model, got {len(models)}")
            preds = predict_bio(models[0], sentences, override)
    except (ValueError, KeyError) as exc:
        raise CliError(str(exc)) from None
    Path(args.output).write_text(format_conll(sentences, preds), encoding="utf-8")
    echo_config(args.output, "predict", cfg,
                {"models": args.models, "data": args.data, "mode": mode, "output": args.output,
                 "patterns": [pattern_of(m) for m in models]})
    return 0


def _read_predictions(path):
    try:
        pred = read_conll(path)
    except (OSError, ConllError) as exc:
        raise CliError(str(exc)) from None
    if any(p.pred is None for p in pred):
        raise CliError(f"{path} has no predicted-tag column")
    return pred


def _check_aligned(gold, pred, gold_path, pred_path) -> None:
    if len(gold) != len(pred):
        raise CliError(f"{gold_path} has {len(gold)} sentences, {pred_path} has {len(pred)}")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g.tokens) != len(p.sentence.tokens):
            raise CliError(f"sentence {k}: token counts differ ({len(g.tokens)} vs {len(p.sentence.tokens)})")


def cmd_evaluate(args, cfg) -> int:
    gold = load_sentences(args.gold, cfg)
    pred = _read_predictions(args.pred)
    _check_aligned(gold, pred, args.gold, args.pred)
    report = exact_match_prf([g.gold_spans for g in gold], [tags_to_spans(p.pred) for p in pred],
                             dataset=cfg["report"]["dataset"], model=cfg["report"]["model"])
    try:
        text = emit_report(report, args.format)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    Path(args.output).write_text(text, encoding="utf-8")
    echo_config(args.output, "evaluate", cfg,
                {"gold": args.gold, "pred": args.pred, "format": args.format, "output": args.output})
    return 0


def cmd_ensemble_check(args, cfg) -> int:
    """Verify that an ensemble prediction file is the majority vote of three single-model files."""
    if len(args.single) != 3:
        raise CliError("--single needs the crf-bio, crf-bmeo and span prediction files, in that order")
    ens = _read_predictions(args.ensemble)
    sentences = [e.sentence for e in ens]
    singles = []
    for path in args.single:
        pred = _read_predictions(path)
        _check_aligned(sentences, pred, args.ensemble, path)
        singles.append(pred)
    mismatches = []
    for k, parts in enumerate(zip(*singles, ens)):
        expected = majority_vote(*(p.pred for p in parts[:3]))
        if expected.labels != parts[3].pred.labels:
            mismatches.append(k)
    result = {"sentences": len(ens), "mismatched_sentences": mismatches, "consistent": not mismatches}
    if args.output:
        Path(args.output).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
        echo_config(args.output, "ensemble-check", cfg,
                    {"single": args.single, "ensemble": args.ensemble, "output": args.output})
    if mismatches:
        print(f"ensemble output differs from the majority vote in {len(mismatches)} sentence(s)", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mutner", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key, e.g. train.epochs=20")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[common], help="PubTator file to token/tag file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("expand", parents=[common], help="merge corpora with dictionary-filtered negatives")
    p.add_argument("corpora", nargs="+")
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("train", parents=[common], help="train one recognition pattern")
    p.add_argument("--pattern", choices=PATTERNS, required=True)
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--dev")
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="tag a token file with one model or the ensemble")
    p.add_argument("--model", dest="models", nargs="+", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--keep-single", metavar="DIR", help="also write each model's output (ensemble modes)")
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="exact-match P/R/F1 report")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ensemble-check", parents=[common], help="check ensemble output against the vote")
    p.add_argument("--single", nargs="+", required=True)
    p.add_argument("--ensemble", required=True)
    p.add_argument("--out", dest="output")
    p.set_defaults(func=cmd_ensemble_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_run_config(args.config, args.set)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"mutner {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
