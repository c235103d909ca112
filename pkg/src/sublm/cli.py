"""Command-line interface: every pipeline stage plus an experiment runner.

Exit codes: 0 success, 2 usage or bad argument values, 3 data errors,
4 internal invariant breaches.  Diagnostics go to stderr, data to stdout.
Every produced artifact gets a ``<output>.manifest.json`` sidecar recording
the argv, input/output checksums and seeds needed for a bit-exact re-run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .bpe import BpeTokenizer
from .corpus import Corpus, WordVocabulary, build_vocabulary, load_corpus
from .errors import ContractViolationError, DataFormatError, SublmError
from .evalkit import evaluate_model, footprint
from .genaug import (
    GenerationConfig,
    NgramSequenceModel,
    generate_corpus,
    ingest_external_text,
    run_pipeline,
)
from .mix import MixtureWeights, interpolate_static, optimize_weights
from .morfseg import MorfessorSegmenter
from .ngram import (
    count_ngrams,
    estimate_discounts,
    estimate_kn_model,
    perplexity,
    prune_to_budget,
    read_arpa,
    write_arpa,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    output: str | Path,
    command: str,
    argv: list[str],
    inputs: list[str | Path],
    seed: int | None = None,
    extra: dict | None = None,
) -> Path:
    config = {"command": command, "argv": list(argv), "seed": seed}
    manifest = {
        **config,
        "tool_version": __version__,
        "config_hash": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "output": {str(output): _sha256(output)},
    }
    if extra:
        manifest.update(extra)
    path = Path(str(output) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_tokenizer(path: str):
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline()
    if magic.startswith("#bpe"):
        return BpeTokenizer.load(path)
    if magic.startswith("#morphlex"):
        return MorfessorSegmenter.load(path)
    raise DataFormatError(f"unrecognized tokenizer file {path}", line=1)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_tokenize_train(args, argv) -> int:
    corpus = load_corpus(args.infile, normalization=args.normalization)
    if args.algo == "bpe":
        tok = BpeTokenizer(inventory_size=args.inventory).fit(corpus)
        inventory = tok.inventory_
    else:
        tok = MorfessorSegmenter(
            corpus_weight=args.corpus_weight, random_state=args.seed
        ).fit(corpus)
        inventory = len(tok.lexicon_.morphs)
    tok.save(args.out)
    write_manifest(args.out, "tokenize train", argv, [args.infile], seed=args.seed)
    print(json.dumps({"inventory": inventory, "out": args.out}))
    return EXIT_OK


def cmd_tokenize_apply(args, argv) -> int:
    tok = _load_tokenizer(args.model)
    corpus = load_corpus(args.infile, normalization=args.normalization)
    segmented = Corpus.from_sentences(tok.transform(corpus), subword_input=True)
    segmented.save(args.out)
    write_manifest(args.out, "tokenize apply", argv, [args.model, args.infile])
    print(json.dumps({"tokens": segmented.token_count, "out": args.out}))
    return EXIT_OK


def cmd_lm_train(args, argv) -> int:
    corpus = load_corpus(
        args.infile, normalization=args.normalization, subword_input=args.subword_input
    )
    vocab = build_vocabulary(corpus, args.vocab_cap)
    counts = count_ngrams(corpus, args.order, vocab)
    model = estimate_kn_model(counts, estimate_discounts(counts))
    write_arpa(model, args.out)
    write_manifest(args.out, "lm train", argv, [args.infile])
    print(
        json.dumps(
            {
                "order": args.order,
                "vocabulary": len(vocab),
                "ngrams": [model.entry_count(n) for n in range(1, args.order + 1)],
                "footprint_bytes": footprint(model),
                "out": args.out,
            }
        )
    )
    return EXIT_OK


def cmd_lm_prune(args, argv) -> int:
    model = read_arpa(args.model)
    pruned = prune_to_budget(model, args.budget_bytes)
    write_arpa(pruned, args.out)
    write_manifest(args.out, "lm prune", argv, [args.model])
    print(
        json.dumps(
            {
                "budget_bytes": args.budget_bytes,
                "footprint_bytes": footprint(pruned),
                "ngrams": [pruned.entry_count(n) for n in range(1, pruned.order + 1)],
                "out": args.out,
            }
        )
    )
    return EXIT_OK


def cmd_lm_score(args, argv) -> int:
    model = read_arpa(args.model)
    test = load_corpus(
        args.test, normalization=args.normalization, subword_input=args.subword_input
    )
    normalization = "per-word" if args.per_word else "per-token"
    print(
        json.dumps(
            {
                "perplexity": perplexity(model, test, normalization),
                "normalization": normalization,
                "sentences": len(test),
                "tokens": test.token_count,
            }
        )
    )
    return EXIT_OK


def cmd_generate(args, argv) -> int:
    model = read_arpa(args.model)
    source = load_corpus(args.source, normalization=args.normalization)
    config = GenerationConfig(
        target_token_count=args.target_tokens,
        prefix_len_min=args.prefix_min,
        prefix_len_max=args.prefix_max,
        temperature_min=args.temperature_min,
        temperature_max=args.temperature_max,
        max_tokens_per_sentence=args.max_sentence_tokens,
        seed=args.seed,
    )
    out_set = generate_corpus(NgramSequenceModel(model), source, config)
    out_set.generated.save(args.out)
    write_manifest(
        args.out,
        "generate",
        argv,
        [args.model, args.source],
        seed=args.seed,
        extra={"generation_config": config.to_dict()},
    )
    print(
        json.dumps(
            {
                "sentences": len(out_set.generated),
                "tokens": out_set.generated.token_count,
                "out": args.out,
            }
        )
    )
    return EXIT_OK


def cmd_mix(args, argv) -> int:
    components = [read_arpa(p) for p in args.components]
    if args.weights:
        raw = [float(w) for w in args.weights.split(",")]
        weights = MixtureWeights(tuple(w / sum(raw) for w in raw))
    elif args.tuning:
        tuning = load_corpus(
            args.tuning, normalization=args.normalization, subword_input=True
        )
        weights = optimize_weights(components, tuning)
    else:
        raise ValueError("mix requires either --tuning or --weights")
    mixed = interpolate_static(components, weights)
    write_arpa(mixed, args.out)
    write_manifest(
        args.out,
        "mix",
        argv,
        list(args.components) + ([args.tuning] if args.tuning else []),
        extra={"mixture_weights": list(weights.weights)},
    )
    print(json.dumps({"mixture_weights": list(weights.weights), "out": args.out}))
    return EXIT_OK


def cmd_eval(args, argv) -> int:
    model = read_arpa(args.model)
    test = load_corpus(args.test, normalization=args.normalization)
    tokenizer = _load_tokenizer(args.tokenizer) if args.tokenizer else None
    training_vocab = WordVocabulary.load(args.train_vocab) if args.train_vocab else None
    hypotheses = (
        load_corpus(args.hyp, normalization=args.normalization) if args.hyp else None
    )
    report = evaluate_model(
        model,
        test,
        model_id=args.model_id,
        tokenizer=tokenizer,
        training_vocab=training_vocab,
        hypotheses=hypotheses,
    )
    text = report.to_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        write_manifest(
            args.out,
            "eval",
            argv,
            [p for p in (args.model, args.test, args.tokenizer, args.train_vocab, args.hyp) if p],
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Experiment runner


def _run_experiment_cell(run: dict, datasets: dict, out_dir: Path, cache: bool, gen_cache: dict) -> dict:
    run_id = run["id"]
    run_dir = out_dir / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    config_hash = hashlib.sha256(
        json.dumps(run, sort_keys=True).encode()
    ).hexdigest()
    marker = run_dir / "run.manifest.json"
    report_path = run_dir / "report.json"
    if cache and marker.exists() and report_path.exists():
        previous = json.loads(marker.read_text(encoding="utf-8"))
        if previous.get("config_hash") == config_hash:
            report = json.loads(report_path.read_text(encoding="utf-8"))
            report["cached"] = True
            return report

    train = load_corpus(datasets["train"])
    valid = load_corpus(datasets["valid"])
    eval_corpus = load_corpus(datasets["eval"])

    generator = run.get("generator", {})
    gen_key = json.dumps(generator, sort_keys=True) + json.dumps(
        run.get("generation", {}), sort_keys=True
    )
    if gen_key in gen_cache:
        generated = gen_cache[gen_key]
    elif generator.get("source") == "file":
        generated = ingest_external_text(generator["path"])
        gen_cache[gen_key] = generated
    else:
        gen_corpus = load_corpus(generator["corpus"])
        counts = count_ngrams(gen_corpus, generator.get("order", 3), None)
        sampler = NgramSequenceModel(
            estimate_kn_model(counts, estimate_discounts(counts))
        )
        config = GenerationConfig(**run["generation"])
        generated = generate_corpus(sampler, train, config)
        gen_cache[gen_key] = generated

    result = run_pipeline(
        train,
        generated,
        run["mode"],
        tuning=valid,
        order=run.get("order", 4),
        vocab_cap=run.get("vocab_cap"),
        budget_bytes=run.get("budget_bytes"),
        bpe_inventory=run.get("bpe_inventory", 2000),
        morfessor_corpus_weight=run.get("corpus_weight", 1.0),
        seed=run.get("seed", 0),
    )
    for name, model in (
        ("bnlm", result.bnlm),
        ("tr_bnlm", result.tr_bnlm),
        ("mixed", result.mixed),
    ):
        write_arpa(model, run_dir / f"{name}.arpa")
    if result.tokenizer is not None:
        result.tokenizer.save(run_dir / "tokenizer.txt")

    training_vocab = build_vocabulary(train)
    hypotheses = (
        load_corpus(run["hypotheses"]) if run.get("hypotheses") else None
    )
    report = evaluate_model(
        result.mixed,
        eval_corpus,
        model_id=run_id,
        tokenizer=result.tokenizer,
        training_vocab=training_vocab,
        hypotheses=hypotheses,
    ).to_dict()
    report["mixture_weights"] = list(result.weights.weights)
    report["info"] = result.info
    report["baseline_perplexity_per_word"] = evaluate_model(
        result.bnlm, eval_corpus, model_id=run_id + "-bnlm", tokenizer=result.tokenizer
    ).perplexity_per_word
    report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    marker.write_text(
        json.dumps(
            {"config_hash": config_hash, "run": run, "tool_version": __version__},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    report["cached"] = False
    return report


def _format_table(rows: list[dict]) -> str:
    headers = ["model", "vocab", "footprint", "ppl/word", "oov-rate", "P", "R", "F1"]
    table = [headers]
    for row in rows:
        if row.get("failed"):
            table.append([row["model_id"], "FAILED", "", "", "", "", "", ""])
            continue
        table.append(
            [
                row["model_id"],
                str(row["token_inventory_size"]),
                str(row["footprint_bytes"]),
                f"{row['perplexity_per_word']:.2f}",
                f"{row['oov_rate']:.4f}",
                "-" if row.get("oov_precision") is None else f"{row['oov_precision']:.3f}",
                "-" if row.get("oov_recall") is None else f"{row['oov_recall']:.3f}",
                "-" if row.get("oov_f1") is None else f"{row['oov_f1']:.3f}",
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    lines = []
    for r in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def cmd_experiment(args, argv) -> int:
    plan = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    runs = plan.get("runs", [])
    if not runs:
        raise ValueError("experiment plan has no runs")
    ids = [r.get("id") for r in runs]
    if len(set(ids)) != len(ids) or None in ids:
        raise ValueError("run ids must be present and unique")
    datasets = plan["datasets"]
    for key in ("train", "valid", "eval"):
        if not Path(datasets[key]).exists():
            raise DataFormatError(f"dataset {key} missing: {datasets[key]}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    gen_cache: dict = {}
    for run in runs:
        try:
            rows.append(_run_experiment_cell(run, datasets, out_dir, args.cache, gen_cache))
        except Exception as exc:  # continue remaining runs, mark failed cells
            print(f"run {run['id']} failed: {exc}", file=sys.stderr)
            rows.append({"model_id": run["id"], "failed": True, "error": str(exc)})
    (out_dir / "comparison.json").write_text(
        json.dumps(rows, indent=2) + "\n", encoding="utf-8"
    )
    table = _format_table(rows)
    (out_dir / "comparison.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sublm",
        description="Subword-based text augmentation toolkit for back-off n-gram LMs",
    )
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; the desk-scale pipeline runs single-threaded")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output only (default already is)")
    parser.add_argument("--normalization", choices=["none", "nfc+lowercase"],
                        default="nfc+lowercase", help="text normalization for corpus files")
    sub = parser.add_subparsers(dest="command", required=True)

    tok = sub.add_parser("tokenize", help="train or apply subword tokenizers")
    tok_sub = tok.add_subparsers(dest="subcommand", required=True)
    tok_train = tok_sub.add_parser("train")
    tok_train.add_argument("--algo", choices=["bpe", "morfessor"], required=True)
    tok_train.add_argument("--in", dest="infile", required=True)
    tok_train.add_argument("--out", required=True)
    tok_train.add_argument("--inventory", type=int, default=2000,
                           help="BPE inventory target (alphabet + merges)")
    tok_train.add_argument("--corpus-weight", type=float, default=1.0,
                           help="corpus cost weight for the morfessor algorithm")
    tok_train.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                           help="seed override for this subcommand")
    tok_train.set_defaults(func=cmd_tokenize_train)
    tok_apply = tok_sub.add_parser("apply")
    tok_apply.add_argument("--model", required=True)
    tok_apply.add_argument("--in", dest="infile", required=True)
    tok_apply.add_argument("--out", required=True)
    tok_apply.set_defaults(func=cmd_tokenize_apply)

    lm = sub.add_parser("lm", help="train, prune or score back-off models")
    lm_sub = lm.add_subparsers(dest="subcommand", required=True)
    lm_train = lm_sub.add_parser("train")
    lm_train.add_argument("--in", dest="infile", required=True)
    lm_train.add_argument("--out", required=True)
    lm_train.add_argument("--order", type=int, default=4)
    lm_train.add_argument("--vocab-cap", type=int, default=None)
    lm_train.add_argument("--subword-input", action="store_true")
    lm_train.set_defaults(func=cmd_lm_train)
    lm_prune = lm_sub.add_parser("prune")
    lm_prune.add_argument("--model", required=True)
    lm_prune.add_argument("--budget-bytes", type=int, required=True)
    lm_prune.add_argument("--out", required=True)
    lm_prune.set_defaults(func=cmd_lm_prune)
    lm_score = lm_sub.add_parser("score")
    lm_score.add_argument("--model", required=True)
    lm_score.add_argument("--test", required=True)
    lm_score.add_argument("--per-word", action="store_true")
    lm_score.add_argument("--subword-input", action="store_true")
    lm_score.set_defaults(func=cmd_lm_score)

    gen = sub.add_parser("generate", help="sample an augmentation corpus")
    gen.add_argument("--model", required=True, help="ARPA model backing the sampler")
    gen.add_argument("--source", required=True, help="corpus supplying prefix prompts")
    gen.add_argument("--out", required=True)
    gen.add_argument("--target-tokens", type=int, required=True)
    gen.add_argument("--prefix-min", type=int, default=1)
    gen.add_argument("--prefix-max", type=int, default=7)
    gen.add_argument("--temperature-min", type=float, default=1.0)
    gen.add_argument("--temperature-max", type=float, default=1.5)
    gen.add_argument("--max-sentence-tokens", type=int, default=64)
    gen.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                     help="seed override for this subcommand")
    gen.set_defaults(func=cmd_generate)

    mix = sub.add_parser("mix", help="interpolate back-off models")
    mix.add_argument("--components", nargs="+", required=True)
    mix.add_argument("--tuning", default=None)
    mix.add_argument("--weights", default=None,
                     help="comma-separated fixed weights instead of EM tuning")
    mix.add_argument("--out", required=True)
    mix.set_defaults(func=cmd_mix)

    ev = sub.add_parser("eval", help="evaluate a model against a test corpus")
    ev.add_argument("--model", required=True)
    ev.add_argument("--test", required=True)
    ev.add_argument("--tokenizer", default=None)
    ev.add_argument("--train-vocab", default=None)
    ev.add_argument("--hyp", default=None, help="hypothesis corpus for OOV P/R/F1")
    ev.add_argument("--model-id", default="model")
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=cmd_eval)

    exp = sub.add_parser("experiment", help="run a full comparison grid from a plan")
    exp.add_argument("--plan", required=True)
    exp.add_argument("--out-dir", required=True)
    exp.add_argument("--cache", action="store_true")
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractViolationError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except SublmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
