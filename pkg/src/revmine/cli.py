"""Command-line pipeline: config-driven subcommands over a run directory.

Every subcommand reads files named in the config or flags, writes its
artifacts under the run directory, and drops a manifest (config hash, seed,
input digests) beside them so runs can be audited and reproduced.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from . import classify, corpus, labels, patterns
from .augment import balance_to_mps, save_report_json, save_report_tsv
from .config import PipelineConfig, load_config
from .dataset import (
    LabeledSentence,
    SplitSpec,
    build_pair_matrix,
    label_sentence,
    load_dataset,
    pair_histogram,
    save_dataset,
    save_histogram_csv,
    save_matrix_tsv,
    split_dataset,
)
from .errors import PipelineError, RevmineError
from .evaluate import build_report
from .evaluate import save_report_json as save_metrics_json
from .evaluate import save_report_tsv as save_metrics_tsv
from .experiment import (
    major_minor_breakdown,
    run_mps_sweep,
    save_breakdown_csv,
    save_sweep_csv,
    save_sweep_json,
)
from .ngram import build_ngram_index

# Which subcommand produces each run-directory artifact, for error messages.
_PRODUCERS = {
    "dataset/sentences.jsonl": "ingest",
    "candidates/component.tsv": "mine",
    "dataset/labeled.jsonl": "build-dataset",
    "dataset/train.jsonl": "build-dataset",
    "dataset/validation.jsonl": "build-dataset",
    "dataset/evaluation.jsonl": "build-dataset",
    "models/component/manifest.json": "train",
    "models/aspect/manifest.json": "train",
}


def _artifact(run_dir: Path, rel: str) -> Path:
    path = run_dir / rel
    if not path.exists():
        step = _PRODUCERS.get(rel, "an earlier step")
        raise PipelineError(f"missing {path}; run '{step}' first")
    return path


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_hash(config: PipelineConfig) -> str:
    blob = json.dumps(dataclasses.asdict(config), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _write_manifest(
    run_dir: Path, command: str, config: PipelineConfig, inputs: list[Path], outputs: list[Path]
) -> None:
    manifests = run_dir / "manifests"
    manifests.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "config_hash": _config_hash(config),
        "seed": config.seed,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    with open(manifests / f"{command}.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def _dirs(run_dir: Path, *names: str) -> None:
    for name in names:
        (run_dir / name).mkdir(parents=True, exist_ok=True)


def cmd_ingest(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "dataset")
    corpus_path = Path(config.require("corpus"))
    reviews = corpus.ingest(corpus_path)
    tokenizer = config.make_tokenizer()
    sentences = corpus.split_and_tokenize(reviews, tokenizer)
    out = run_dir / "dataset" / "sentences.jsonl"
    corpus.save_sentences(sentences, out)
    _write_manifest(run_dir, "ingest", config, [corpus_path], [out])
    print(f"ingested {len(reviews)} reviews -> {len(sentences)} sentences ({out})")
    return 0


def cmd_mine(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "candidates")
    sentences_path = _artifact(run_dir, "dataset/sentences.jsonl")
    patterns_path = Path(config.require("patterns"))
    sentences = corpus.load_sentences(sentences_path)
    rules = patterns.load_pattern_rules(patterns_path)
    comp, asp = patterns.mine_candidates(sentences, rules)
    outs = [run_dir / "candidates" / "component.tsv", run_dir / "candidates" / "aspect.tsv"]
    patterns.save_candidates_tsv(comp, outs[0])
    patterns.save_candidates_tsv(asp, outs[1])
    _write_manifest(run_dir, "mine", config, [sentences_path, patterns_path], outs)
    print(
        f"mined {len(comp.rows)} component and {len(asp.rows)} aspect candidates "
        f"from {len(sentences)} sentences"
    )
    return 0


def cmd_curate_template(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "candidates")
    sentences_path = _artifact(run_dir, "dataset/sentences.jsonl")
    patterns_path = Path(config.require("patterns"))
    sentences = corpus.load_sentences(sentences_path)
    rules = patterns.load_pattern_rules(patterns_path)
    comp, asp = patterns.mine_candidates(sentences, rules)
    prior = None
    if config.curation and Path(config.curation).exists():
        prior = labels.load_curation(config.curation, labels.load_schema(config.require("schema")))
    outs = []
    for table in (comp, asp):
        out = run_dir / "candidates" / f"curation_template_{table.role}.tsv"
        labels.write_curation_template(table, out, curation=prior)
        outs.append(out)
    _write_manifest(run_dir, "curate-template", config, [sentences_path, patterns_path], outs)
    print(f"wrote {', '.join(str(o) for o in outs)}; edit dispositions, then build-dataset")
    return 0


def _label_from_patterns(config: PipelineConfig, run_dir: Path) -> list[LabeledSentence]:
    schema = labels.load_schema(config.require("schema"))
    curation = labels.load_curation(config.require("curation"), schema)
    rules = patterns.load_pattern_rules(config.require("patterns"))
    sentences = corpus.load_sentences(_artifact(run_dir, "dataset/sentences.jsonl"))
    labeled = []
    for sentence in sentences:
        components: set[str] = set()
        aspects: set[str] = set()
        for rule in rules:
            for m in patterns.match_sentence(rule, sentence):
                c = curation.entries.get((m.component_surface, "component"))
                if c is not None and c.disposition == "map":
                    components.add(c.target)
                a = curation.entries.get((m.aspect_surface, "aspect"))
                if a is not None and a.disposition == "map":
                    aspects.add(a.target)
        if components and aspects:
            labeled.append(label_sentence(sentence, components, aspects))
    return labeled


def cmd_build_dataset(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "dataset")
    schema = labels.load_schema(config.require("schema"))
    inputs = [Path(config.require("schema"))]
    if args.labeled:
        labeled = load_dataset(args.labeled)
        inputs.append(Path(args.labeled))
    else:
        labeled = _label_from_patterns(config, run_dir)
        inputs.append(_artifact(run_dir, "dataset/sentences.jsonl"))

    matrix = build_pair_matrix(labeled, schema)
    histogram = pair_histogram(matrix, bucket_width=int(args.bucket_width))
    spec = SplitSpec(
        seed=config.seed,
        eval_per_pair=int(config.eval.get("eval_per_pair", 2)),
        eval_pair_min=int(config.eval.get("eval_pair_min", 5)),
        validation_size=int(config.eval.get("validation_size", 50)),
    )
    split = split_dataset(labeled, schema, spec)
    outs = {
        "labeled": run_dir / "dataset" / "labeled.jsonl",
        "matrix": run_dir / "dataset" / "matrix.tsv",
        "histogram": run_dir / "dataset" / "histogram.csv",
        "train": run_dir / "dataset" / "train.jsonl",
        "validation": run_dir / "dataset" / "validation.jsonl",
        "evaluation": run_dir / "dataset" / "evaluation.jsonl",
    }
    save_dataset(labeled, outs["labeled"])
    save_matrix_tsv(matrix, outs["matrix"])
    save_histogram_csv(histogram, outs["histogram"])
    save_dataset(split.train, outs["train"])
    save_dataset(split.validation, outs["validation"])
    save_dataset(split.evaluation, outs["evaluation"])
    _write_manifest(run_dir, "build-dataset", config, inputs, list(outs.values()))
    print(
        f"labeled {len(labeled)} sentences over {len(matrix.nonzero_pairs())} pairs; "
        f"{histogram.small_pairs} pairs have <= {histogram.small_pair_cut} sentences; "
        f"split train={len(split.train)} validation={len(split.validation)} "
        f"evaluation={len(split.evaluation)}"
    )
    return 0


def cmd_augment(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "augmented")
    schema = labels.load_schema(config.require("schema"))
    train_path = _artifact(run_dir, "dataset/train.jsonl")
    train_part = load_dataset(train_path)
    sentences_path = _artifact(run_dir, "dataset/sentences.jsonl")
    corpus_sentences = corpus.load_sentences(sentences_path)
    aug_config = config.augmentation_config(args.mps)
    index = build_ngram_index(corpus_sentences, n_max=max(3, *aug_config.ngram_levels))
    lexicon = config.make_lexicon()
    matrix = build_pair_matrix(train_part, schema)
    joiner = config.make_tokenizer().joiner
    augmented, report = balance_to_mps(
        train_part, matrix, lexicon, index, aug_config, joiner=joiner
    )
    outs = [
        run_dir / "augmented" / "train.jsonl",
        run_dir / "augmented" / "report.tsv",
        run_dir / "augmented" / "report.json",
    ]
    save_dataset(augmented, outs[0])
    save_report_tsv(report, outs[1])
    save_report_json(report, outs[2])
    _write_manifest(
        run_dir,
        "augment",
        config,
        [train_path, sentences_path, Path(config.require("lexicon"))],
        outs,
    )
    print(
        f"MPS={aug_config.mps}: generated {report.generated_total} sentences over "
        f"{report.pairs_processed} pairs ({len(report.deficient_pairs())} deficient); "
        f"train {len(train_part)} -> {len(augmented)}"
    )
    return 0


def _training_input(run_dir: Path) -> Path:
    augmented = run_dir / "augmented" / "train.jsonl"
    if augmented.exists():
        return augmented
    return _artifact(run_dir, "dataset/train.jsonl")


def cmd_train(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "models")
    schema = labels.load_schema(config.require("schema"))
    train_path = _training_input(run_dir)
    dataset = load_dataset(train_path)
    train_config = config.train_config()
    default = float(config.model.get("threshold_default", 0.5))
    outs = []
    for role in ("component", "aspect"):
        model = classify.train(dataset, role, schema, config.make_backend(), train_config)
        model = classify.with_thresholds(model, classify.ThresholdSet(thresholds={}, default=default))
        out = run_dir / "models" / role
        classify.save_model(model, out)
        outs.append(out / "manifest.json")
        print(
            f"{role}: trained on {len(dataset)} sentences "
            f"(final loss {model.training_log[-1]['loss']:.4f}) -> {out}"
        )
    _write_manifest(run_dir, "train", config, [train_path], outs)
    return 0


def cmd_calibrate(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    validation_path = _artifact(run_dir, "dataset/validation.jsonl")
    validation = load_dataset(validation_path)
    outs = []
    for role in ("component", "aspect"):
        model_dir = _artifact(run_dir, f"models/{role}/manifest.json").parent
        model = classify.load_model(model_dir)
        thresholds = classify.calibrate_thresholds(model, validation)
        classify.save_model(classify.with_thresholds(model, thresholds), model_dir)
        outs.append(model_dir / "manifest.json")
        print(f"{role}: calibrated, validation macro-F1 {thresholds.macro_f1:.4f}")
    _write_manifest(run_dir, "calibrate", config, [validation_path], outs)
    return 0


def cmd_evaluate(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "reports")
    evaluation_path = _artifact(run_dir, "dataset/evaluation.jsonl")
    evaluation = load_dataset(evaluation_path)
    outs, inputs = [], [evaluation_path]
    for role in ("component", "aspect"):
        model_dir = _artifact(run_dir, f"models/{role}/manifest.json").parent
        model = classify.load_model(model_dir)
        predicted = [classify.assign_labels(model, s) for s in evaluation]
        truth = [
            s.component_labels if role == "component" else s.aspect_labels for s in evaluation
        ]
        report = build_report(
            predicted,
            truth,
            model.label_order,
            config={"seed": config.seed, "backend": model.backend.name, "role": role},
        )
        tsv = run_dir / "reports" / f"metrics_{role}.tsv"
        js = run_dir / "reports" / f"metrics_{role}.json"
        save_metrics_tsv(report, tsv)
        save_metrics_json(report, js)
        outs += [tsv, js]
        inputs.append(model_dir / "manifest.json")
        print(f"{role}: evaluation macro-F1 {report.macro_f1:.4f} ({len(evaluation)} sentences)")
    _write_manifest(run_dir, "evaluate", config, inputs, outs)
    return 0


def cmd_sweep(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "reports")
    schema = labels.load_schema(config.require("schema"))
    labeled_path = _artifact(run_dir, "dataset/labeled.jsonl")
    dataset = load_dataset(labeled_path)
    lexicon = config.make_lexicon()
    mps_values = [int(v) for v in args.mps.split(",")]
    seeds = [int(v) for v in args.seeds.split(",")] if args.seeds else [config.seed]
    spec = SplitSpec(
        seed=0,
        eval_per_pair=int(config.eval.get("eval_per_pair", 2)),
        eval_pair_min=int(config.eval.get("eval_pair_min", 5)),
        validation_size=int(config.eval.get("validation_size", 50)),
    )
    aug_block = config.augment
    sweep = run_mps_sweep(
        dataset,
        schema,
        lexicon,
        mps_values,
        seeds,
        config.make_backend,
        split=spec,
        train_config=config.train_config(),
        eligibility_min=int(aug_block.get("eligibility_min", 3)),
        max_attempts_per_pair=int(aug_block.get("max_attempts", 200)),
        ngram_levels=tuple(aug_block.get("ngram_levels", (3, 2, 1))),
        joiner=config.make_tokenizer().joiner,
    )
    matrix = build_pair_matrix(dataset, schema)
    breakdown = major_minor_breakdown(sweep, matrix, cut=int(config.eval.get("cut", 10)))
    outs = [
        run_dir / "reports" / "sweep.csv",
        run_dir / "reports" / "sweep.json",
        run_dir / "reports" / "breakdown.csv",
    ]
    save_sweep_csv(sweep, outs[0])
    save_sweep_json(sweep, outs[1])
    save_breakdown_csv(breakdown, outs[2])
    _write_manifest(run_dir, "sweep", config, [labeled_path], outs)
    for mps in sweep.mps_values:
        comp = sweep.mean_macro_f1("component", mps)
        asp = sweep.mean_macro_f1("aspect", mps)
        print(f"MPS={mps}: component macro-F1 {comp:.4f}, aspect macro-F1 {asp:.4f}")
    return 0


def cmd_extract(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    sentences_path = _artifact(run_dir, "dataset/sentences.jsonl")
    sentences = corpus.load_sentences(sentences_path)
    component_model = classify.load_model(
        _artifact(run_dir, "models/component/manifest.json").parent
    )
    aspect_model = classify.load_model(_artifact(run_dir, "models/aspect/manifest.json").parent)
    matches = classify.extract_comments(
        component_model, aspect_model, sentences, (args.component, args.aspect)
    )
    _dirs(run_dir, "reports")
    out = run_dir / "reports" / f"extract--{args.component}--{args.aspect}.txt"
    with open(out, "w", encoding="utf-8") as fh:
        for s in matches:
            print(s.surface)
            fh.write(s.surface + "\n")
    _write_manifest(run_dir, "extract", config, [sentences_path], [out])
    return 0


def cmd_compare_indicators(config: PipelineConfig, args) -> int:
    run_dir = Path(config.run_dir)
    _dirs(run_dir, "reports")
    schema = labels.load_schema(config.require("schema"))
    indicators_path = Path(config.require("indicators"))
    indicators = labels.load_indicators(indicators_path)
    comparison = labels.compare_to_indicators(schema, indicators)
    out = run_dir / "reports" / "indicators.tsv"
    labels.save_comparison_tsv(comparison, indicators, out)
    _write_manifest(run_dir, "compare-indicators", config, [indicators_path], [out])
    for role, s in comparison.by_role.items():
        print(
            f"{role}: n={s.count} string={s.string_pct}% semantic={s.semantic_pct}% "
            f"total={s.total_pct}%"
        )
    c = comparison.combined
    print(f"combined: n={c.count} total={c.total_pct}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revmine",
        description="Mine component/aspect comments from product reviews.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to the pipeline config JSON")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--run-dir", help="override the run directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="tokenize the review corpus").set_defaults(
        fn=cmd_ingest
    )
    sub.add_parser("mine", parents=[common], help="mine label candidates").set_defaults(
        fn=cmd_mine
    )
    sub.add_parser(
        "curate-template", parents=[common], help="emit editable curation templates"
    ).set_defaults(fn=cmd_curate_template)

    p = sub.add_parser(
        "build-dataset", parents=[common], help="label sentences, build matrix, split"
    )
    p.add_argument("--labeled", help="use this labeled JSONL instead of pattern bootstrap")
    p.add_argument("--bucket-width", default=5, help="histogram bucket width")
    p.set_defaults(fn=cmd_build_dataset)

    p = sub.add_parser("augment", parents=[common], help="rebalance pairs up to the MPS")
    p.add_argument("--mps", type=int, help="minimum pair size (overrides config)")
    p.set_defaults(fn=cmd_augment)

    sub.add_parser("train", parents=[common], help="train both classifiers").set_defaults(
        fn=cmd_train
    )
    sub.add_parser(
        "calibrate", parents=[common], help="calibrate thresholds on validation"
    ).set_defaults(fn=cmd_calibrate)
    sub.add_parser(
        "evaluate", parents=[common], help="evaluate on the held-out partition"
    ).set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="run the MPS sweep")
    p.add_argument("--mps", default="0,5,10,15,20", help="comma-separated MPS values")
    p.add_argument("--seeds", help="comma-separated seeds (default: config seed)")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("extract", parents=[common], help="extract comments for one pair")
    p.add_argument("--component", required=True)
    p.add_argument("--aspect", required=True)
    p.set_defaults(fn=cmd_extract)

    sub.add_parser(
        "compare-indicators", parents=[common], help="compare schema labels to indicators"
    ).set_defaults(fn=cmd_compare_indicators)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed=args.seed)
        if args.run_dir:
            config = dataclasses.replace(config, run_dir=args.run_dir)
        return args.fn(config, args)
    except RevmineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
