"""Command-line interface: ``nestner {train,predict,evaluate,ablate,gen-synth}``.

Exit codes: 0 success, 1 internal error, 2 usage or configuration error,
3 incompatible checkpoint, 4 data mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import ablation
from .annotations import Sentence
from .checkpoint import load_checkpoint, save_checkpoint
from .config import KEYS, resolve
from .corpus import Corpus, read_brat, read_jsonl, split, write_jsonl
from .errors import (
    CheckpointError,
    ConfigError,
    EmptyCorpus,
    LengthMismatch,
    MissingTextFile,
    NestNerError,
    ParseError,
    SchemaError,
    SequenceTooLong,
    TooSmall,
)
from .inference import DecodeConfig, predict_corpus
from .metrics import exact_match_prf, format_prf_row, format_report, report_records
from .synthetic import generate_synthetic
from .training import train

log = logging.getLogger("nestner")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_CHECKPOINT, EXIT_DATA = 0, 1, 2, 3, 4
DATA_ERRORS = (LengthMismatch, SchemaError, ParseError, MissingTextFile, TooSmall, EmptyCorpus,
               SequenceTooLong)


def load_corpus(path) -> Corpus:
    """A BRAT directory or a JSON-lines file."""
    path = Path(path)
    return read_brat(path) if path.is_dir() else read_jsonl(path)


def print_config(pairs):
    for line in pairs:
        print(f"config: {line}", flush=True)


def add_config_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    group = p.add_argument_group("config overrides (take precedence over --config)")
    for key in KEYS:
        group.add_argument("--" + key.replace("_", "-"), dest=key, metavar="VALUE")


def overrides_from(args) -> dict:
    return {key: getattr(args, key) for key in KEYS}


def require_paths(parser, *paths):
    for path in paths:
        if path is not None and not Path(path).exists():
            parser.error(f"no such file or directory: {path}")


def resolve_splits(train_path, dev_path, test_path):
    corpus = load_corpus(train_path)
    if dev_path is None and test_path is None:
        return split(corpus)
    test = load_corpus(test_path) if test_path else Corpus()
    if dev_path is None:
        return split(corpus, "provided_files", test=test)
    return corpus, load_corpus(dev_path), test


def labels_of(*corpora) -> list:
    return sorted({m.label for c in corpora for s in c for m in s.mentions})


# ---------------------------------------------------------------------------
# commands


def cmd_train(args, parser) -> int:
    require_paths(parser, args.train, args.dev, args.test, args.config)
    config = resolve(args.config, overrides_from(args))
    print_config(config.lines())
    tr, dv, te = resolve_splits(args.train, args.dev, args.test)
    print(f"data: train={len(tr)} dev={len(dv)} test={len(te)}", flush=True)
    labels = labels_of(tr, dv, te)
    model = config.build_model(labels, sorted({t for s in tr for t in s.tokens}))
    print(f"order: {config.order}", flush=True)
    log_file = open(args.log, "w", encoding="utf-8") if args.log else None

    def on_epoch(record):
        print(record.line(), flush=True)
        if log_file:
            log_file.write(record.line() + "\n")
            log_file.flush()

    try:
        result = train(model, tr.sentences, dv.sentences, config.train_config(), on_epoch)
    finally:
        if log_file:
            log_file.close()
    best = result.history[result.best_epoch - 1] if result.history else None
    if best is not None:
        print(f"best_epoch={result.best_epoch} dev_f1={best.dev_f1:.4f}")
    if len(te):
        pred = predict_corpus(model, te.sentences, config.decode_config(labels), config.workers)
        print(format_prf_row("test", exact_match_prf(pred, te.sentences), 6))
    save_checkpoint(args.out, model)
    print(f"checkpoint: {args.out}")
    return EXIT_OK


def cmd_predict(args, parser) -> int:
    require_paths(parser, args.checkpoint, args.corpus)
    model = load_checkpoint(args.checkpoint)
    iterations = args.max_iterations if model.uses_history else 1
    config = DecodeConfig(iterations, model.read_scheme, model.write_scheme)
    print_config([f"checkpoint = {args.checkpoint}", f"max_iterations = {iterations}",
                  f"workers = {args.workers}"])
    corpus = load_corpus(args.corpus)
    pred = predict_corpus(model, corpus.sentences, config, args.workers)
    write_jsonl(args.out, [Sentence(s.tokens, p, s.doc_id) for s, p in zip(corpus, pred)])
    print(f"predicted {sum(map(len, pred))} mentions in {len(pred)} sentences -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args, parser) -> int:
    require_paths(parser, args.pred, args.gold)
    print_config([f"pred = {args.pred}", f"gold = {args.gold}"])
    pred, gold = load_corpus(args.pred), load_corpus(args.gold)
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predicted sentences vs {len(gold)} gold sentences")
    for i, (p, g) in enumerate(zip(pred, gold)):
        if p.tokens != g.tokens:
            raise LengthMismatch(f"sentence {i}: predicted and gold tokens differ")
    print(format_report(pred.sentences, gold.sentences))
    if args.records:
        Path(args.records).write_text("\n".join(report_records(pred.sentences, gold.sentences)) + "\n",
                                      encoding="utf-8")
    return EXIT_OK


def cmd_ablate(args, parser) -> int:
    require_paths(parser, args.train, args.dev, args.config)
    if args.seeds < 1:
        parser.error("--seeds must be at least 1")
    config = resolve(args.config, overrides_from(args))
    print_config(config.lines() + [f"kind = {args.kind}", f"seeds = {args.seeds}"])
    if args.dev:
        tr, dv = load_corpus(args.train), load_corpus(args.dev)
    else:
        tr, dv, _ = split(load_corpus(args.train))
    records = []

    def on_run(record):
        records.append(json.dumps(record))
        print(f"run: {record['cell']} seed={record['seed']} dev_f1={record['dev_f1']:.4f}", flush=True)

    results = ablation.run_ablation(args.kind, config, tr.sentences, dv.sentences, args.seeds, on_run)
    print(ablation.format_table(args.kind, results))
    records += ablation.summary_records(args.kind, results)
    if args.records:
        Path(args.records).write_text("\n".join(records) + "\n", encoding="utf-8")
    else:
        print("\n".join(records))
    return EXIT_OK


def cmd_gen_synth(args, parser) -> int:
    print_config([f"n_sentences = {args.n_sentences}", f"max_depth = {args.max_depth}",
                  f"labels = {args.labels}", f"seed = {args.seed}"])
    if args.n_sentences < 0 or args.labels < 1 or not 0 <= args.max_depth <= 3:
        parser.error("need n_sentences >= 0, labels >= 1 and 0 <= max_depth <= 3")
    corpus = generate_synthetic(args.n_sentences, args.max_depth, args.labels, args.seed)
    write_jsonl(args.out, corpus)
    print(f"wrote {len(corpus)} sentences -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nestner", description="Iterative nested named entity recognition.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--train", required=True, help="training corpus (JSON lines file or BRAT directory)")
    p.add_argument("--dev", help="dev corpus; otherwise carved from the training data")
    p.add_argument("--test", help="test corpus, scored after training")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="also write per-epoch metrics here")
    add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="iterative prediction with a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument("out", help="output JSON lines file")
    p.add_argument("--max-iterations", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="exact-match scores of predictions against gold")
    p.add_argument("pred")
    p.add_argument("gold")
    p.add_argument("--records", help="write machine-readable JSON lines here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="order, insertion-layer or tag-scheme ablation")
    p.add_argument("kind", choices=ablation.KINDS)
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--seeds", type=int, default=3, help="runs per cell (default 3)")
    p.add_argument("--records", help="write JSON lines here instead of stdout")
    add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gen-synth", help="write a synthetic nested corpus")
    p.add_argument("out")
    p.add_argument("--n-sentences", type=int, default=2400)
    p.add_argument("--max-depth", type=int, default=2)
    p.add_argument("--labels", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except ConfigError as exc:
        print(f"nestner: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointError as exc:
        print(f"nestner: incompatible checkpoint: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except DATA_ERRORS as exc:
        print(f"nestner: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NestNerError, OSError) as exc:
        print(f"nestner: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
