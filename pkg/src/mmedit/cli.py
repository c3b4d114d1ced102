"""Command-line interface: ``mmedit <command> ...``.

Exit status is 0 on success and 2 when an input fails validation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .edit_extraction import ExtractionError, ParseError
from .model import CheckpointError, ConfigError, InputError, beam_search, load_checkpoint, save_checkpoint
from .pipeline import (
    ConsolidationError, DataError, ExperimentConfig, TrainingError, consolidate, evaluate_top1, extract_all,
    extract_record, generate_corpus, load_jsonl, run_ablation, save_jsonl, split_dataset, train,
)
from .pipeline.ablation import checkpoint_extra, training_texts
from .tokenizer import Vocabulary, VocabularyError, normalize_whitespace as normalize, train_subword

VALIDATION_ERRORS = (DataError, ConsolidationError, ConfigError, InputError, CheckpointError, VocabularyError,
                     ParseError, ExtractionError, TrainingError, ValueError, KeyError, FileNotFoundError)

log = logging.getLogger("mmedit")


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise DataError(f"{path}: invalid JSON ({err.msg} at line {err.lineno})") from None


def _vocab_path(checkpoint: str) -> Path:
    return Path(checkpoint).with_suffix(".vocab.txt")


def _load_model(args):
    vocab = Vocabulary.load(args.vocab or _vocab_path(args.checkpoint))
    model, header = load_checkpoint(args.checkpoint, vocab.digest())
    return model, header, vocab


def _records(path: str, extracted: bool) -> list[dict]:
    records, _ = load_jsonl(path)
    if extracted and records and "e_p" not in records[0]:
        records = extract_all(records)
    return records


# ---- commands ---------------------------------------------------------------------

def cmd_corpus_gen(args) -> None:
    records = generate_corpus(args.seed, args.n, args.ambiguity)
    if args.out in (None, "-"):
        for r in records:
            sys.stdout.write(json.dumps(r, sort_keys=True) + "\n")
    else:
        save_jsonl(args.out, records)


def cmd_tokenizer_train(args) -> None:
    records, _ = load_jsonl(args.data)
    if args.split_seed is not None:
        records = split_dataset(records, args.split_seed)[0]
    vocab = train_subword(training_texts(records), args.merges)
    _write(args.out, vocab.to_text())


def cmd_extract(args) -> None:
    records, dropped = load_jsonl(args.input)
    out = extract_all(records)
    if args.out in (None, "-"):
        for r in out:
            sys.stdout.write(json.dumps(r, sort_keys=True) + "\n")
    else:
        save_jsonl(args.out, out)
    log.info("extracted %d record(s), dropped %d", len(out), dropped)


def _experiment(args) -> ExperimentConfig:
    data = _load_json(args.config) if args.config else {}
    cfg = ExperimentConfig.from_dict(data)
    changes = {"seed": args.seed}
    if args.phi:
        changes["phi"] = args.phi
    model = cfg.model.to_dict()
    if args.variant:
        model["variant"] = args.variant
    changes["model"] = model
    return cfg.replace(**changes)


def cmd_train(args) -> None:
    cfg = _experiment(args)
    records = _records(args.data, extracted=True)
    train_set, valid_set, _ = split_dataset(records, cfg.seed)
    vocab = Vocabulary.load(args.vocab) if args.vocab else train_subword(training_texts(train_set), args.merges)
    result = train(cfg, train_set, valid_set, vocab)
    save_checkpoint(args.out, result.model, vocab.digest(), extra=checkpoint_extra(cfg, result))
    vocab.save(_vocab_path(args.out))
    Path(args.out).with_suffix(".log.json").write_text(json.dumps(result.log, indent=1) + "\n")
    print(f"best epoch {result.best_epoch}: valid top-1 {result.best_valid:.2f}% ({result.stopped})")


def cmd_eval(args) -> None:
    model, header, vocab = _load_model(args)
    extra = header["extra"]
    phi = args.phi or extra.get("experiment", {}).get("phi")
    trained_phi = extra.get("experiment", {}).get("phi")
    if trained_phi and phi != trained_phi:
        raise ConsolidationError(f"checkpoint was trained for configuration {trained_phi}, not {phi}")
    records = _records(args.data, extracted=True)
    if args.split != "all":
        parts = dict(zip(("train", "valid", "test"), split_dataset(records, args.seed)))
        records = parts[args.split]
    row, verdicts = evaluate_top1(model, records, phi, vocab, args.beam, extra.get("decode_len", 64))
    if args.verdicts:
        save_jsonl(args.verdicts, verdicts)
    print(f"{phi}\t{model.config.variant}\t{args.split}\t{row['examples']}\t{row['correct']}\t"
          f"{row['accuracy']:.2f}")


def cmd_predict(args) -> None:
    model, header, vocab = _load_model(args)
    extra = header["extra"]
    phi = extra.get("experiment", {}).get("phi", "ecg")
    try:
        record = json.loads(sys.stdin.read())
    except json.JSONDecodeError as err:
        raise DataError(f"standard input: invalid JSON ({err.msg})") from None
    if not isinstance(record, dict):
        raise DataError("standard input: expected one JSON object")
    record.setdefault("id", "stdin")
    if "e_p" not in record and "code_after" in record:
        record = extract_record(record)
    source, _ = consolidate(record, phi, vocab, model.config.variant, model.config.max_len)
    hyps = beam_search(model, [source], args.beam, extra.get("decode_len", 64))[0]
    out = {"id": record["id"], "prediction": normalize(vocab.decode(hyps[0].body)) if hyps else "",
           "hypotheses": [{"text": normalize(vocab.decode(h.body)), "score": h.score} for h in hyps]}
    sys.stdout.write(json.dumps(out) + "\n")


def cmd_ablate(args) -> None:
    matrix = _load_json(args.matrix)
    unknown = set(matrix) - {"phis", "variants", "seeds", "experiment", "corpus", "n_merges"}
    if unknown:
        raise DataError(f"{args.matrix}: unknown keys {', '.join(sorted(unknown))}")
    base = ExperimentConfig.from_dict(matrix.get("experiment", {}))
    if args.data:
        records = _records(args.data, extracted=True)
    else:
        c = matrix.get("corpus", {})
        records = extract_all(generate_corpus(c.get("seed", args.seed), c.get("n", 2000), c.get("ambiguity", 0.5)))
    seeds = matrix.get("seeds", [args.seed])
    report, _ = run_ablation(base, matrix.get("phis", ["e", "eg", "ec", "ecg"]),
                             matrix.get("variants", ["single_encoder"]), records, seeds, args.out,
                             matrix.get("n_merges", 512))
    sys.stdout.write(report.to_tsv())


# ---- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmedit", description="Multi-modal neural code editing on MiniLang.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(parser):
        parser.add_argument("--seed", type=int, default=0)
        return parser

    corpus = sub.add_parser("corpus", help="synthetic corpus tools").add_subparsers(dest="action", required=True)
    gen = seeded(corpus.add_parser("gen", help="generate a synthetic edit corpus"))
    gen.add_argument("--n", type=int, default=2000)
    gen.add_argument("--ambiguity", type=float, default=0.5)
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_corpus_gen)

    tok = sub.add_parser("tokenizer", help="subword tokenizer").add_subparsers(dest="action", required=True)
    tt = seeded(tok.add_parser("train", help="learn merges from a dataset"))
    tt.add_argument("--data", required=True)
    tt.add_argument("--merges", type=int, default=512)
    tt.add_argument("--split-seed", type=int, help="train on this seed's training split only")
    tt.add_argument("--out")
    tt.set_defaults(func=cmd_tokenizer_train)

    ex = seeded(sub.add_parser("extract", help="add e_p, e_n and span to records"))
    ex.add_argument("--in", dest="input", required=True)
    ex.add_argument("--out")
    ex.set_defaults(func=cmd_extract)

    tr = seeded(sub.add_parser("train", help="train one model"))
    tr.add_argument("--data", required=True)
    tr.add_argument("--phi")
    tr.add_argument("--variant", choices=("single_encoder", "multi_encoder", "decoder_only"))
    tr.add_argument("--config", help="JSON experiment config")
    tr.add_argument("--vocab")
    tr.add_argument("--merges", type=int, default=512)
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_train)

    ev = seeded(sub.add_parser("eval", help="top-1 exact match of a checkpoint"))
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--phi")
    ev.add_argument("--beam", type=int, default=5)
    ev.add_argument("--split", choices=("train", "valid", "test", "all"), default="test")
    ev.add_argument("--vocab")
    ev.add_argument("--verdicts")
    ev.set_defaults(func=cmd_eval)

    pr = seeded(sub.add_parser("predict", help="patch one record read from standard input"))
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--beam", type=int, default=5)
    pr.add_argument("--vocab")
    pr.set_defaults(func=cmd_predict)

    ab = seeded(sub.add_parser("ablate", help="train and evaluate a configuration matrix"))
    ab.add_argument("--matrix", required=True, help="JSON file with phis, variants, seeds, experiment, corpus")
    ab.add_argument("--data")
    ab.add_argument("--out", required=True)
    ab.set_defaults(func=cmd_ablate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except VALIDATION_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
