"""Run the whole CLI pipeline against a generated demo workspace.

Writes a small Japanese review corpus plus every input the pipeline needs
(POS lexicon, pattern rules, label schema, curation table, synonym lexicon,
indicator list, config) into --workdir, then drives the subcommands in
order: ingest, mine, curate-template, build-dataset, augment, train,
calibrate, evaluate, extract, compare-indicators.

Usage:
    python3 scripts/run_pipeline.py --workdir demo --mps 6
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from revmine.cli import main as revmine_main

ADVERBS = ("とても", "かなり", "非常に", "すごく", "結構", "相当")

POS = {
    "タイヤ": "noun",
    "ブレーキ": "noun",
    "サドル": "noun",
    "耐久性": "noun",
    "重さ": "noun",
    "の": "particle",
    "が": "particle",
    "高い": "adjective",
    "悪い": "adjective",
    "です": "auxiliary",
    **{adv: "adverb" for adv in ADVERBS},
}

PATTERNS = [
    {
        "name": "no-pattern",
        "elements": [
            {"slot": "component", "pos": ["noun"], "max_tokens": 2},
            {"literal": "の"},
            {"slot": "aspect", "pos": ["noun", "adjective", "verb"], "max_tokens": 2},
        ],
    },
    {
        "name": "ga-pattern",
        "elements": [
            {"slot": "component", "pos": ["noun"], "max_tokens": 1},
            {"literal": "が"},
            {"slot": "aspect", "pos": ["adjective", "verb", "noun"], "max_tokens": 2},
        ],
    },
]

SCHEMA = {
    "product_type": "bicycle",
    "component_labels": ["Tire", "Brake", "Saddle"],
    "aspect_labels": ["Durability", "Weight"],
}

CURATION = (
    "surface\trole\tdisposition\ttarget\n"
    "タイヤ\tcomponent\tmap\tTire\n"
    "ブレーキ\tcomponent\tmap\tBrake\n"
    "サドル\tcomponent\tmap\tSaddle\n"
    "耐久性\taspect\tmap\tDurability\n"
    "重さ\taspect\tmap\tWeight\n"
)

SYNONYMS = (
    "とても\tかなり,非常に\n"
    "かなり\tとても,非常に\n"
    "非常に\tとても,かなり\n"
    "すごく\t結構,相当\n"
    "結構\tすごく,相当\n"
    "相当\tすごく,結構\n"
)

INDICATORS = (
    "tire\tcomponent\tcatalog\t0\n"
    "wheel\tcomponent\tcatalog\t1\n"
    "frame\tcomponent\tcatalog\t0\n"
    "durability\taspect\tsurvey\t0\n"
    "weight\taspect\tsurvey\t1\n"
    "price\taspect\tsurvey\t1\n"
)

# (component surface, aspect surface, review count); the last pair is kept
# small so the augment step has something to rebalance
PAIR_PLAN = (
    ("タイヤ", "耐久性", 12),
    ("タイヤ", "重さ", 12),
    ("ブレーキ", "耐久性", 12),
    ("ブレーキ", "重さ", 12),
    ("サドル", "耐久性", 10),
    ("サドル", "重さ", 5),
)


def write_reviews(path: Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for comp, asp, count in PAIR_PLAN:
            for i in range(count):
                adv = ADVERBS[i % len(ADVERBS)]
                tail = "高い 。" if i % 2 == 0 else "高い です 。"
                n += 1
                record = {
                    "review_id": f"r{n:03d}",
                    "product_type": "bicycle",
                    "text": f"{comp} の {asp} が {adv} {tail}",
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return n


def write_workspace(workdir: Path, args) -> Path:
    workdir.mkdir(parents=True, exist_ok=True)
    count = write_reviews(workdir / "reviews.jsonl")
    print(f"wrote {count} demo reviews to {workdir / 'reviews.jsonl'}")
    (workdir / "pos.json").write_text(json.dumps(POS, ensure_ascii=False), encoding="utf-8")
    (workdir / "patterns.json").write_text(
        json.dumps(PATTERNS, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    (workdir / "schema.json").write_text(json.dumps(SCHEMA, indent=2), encoding="utf-8")
    (workdir / "curation.tsv").write_text(CURATION, encoding="utf-8")
    (workdir / "synonyms.tsv").write_text(SYNONYMS, encoding="utf-8")
    (workdir / "indicators.tsv").write_text(INDICATORS, encoding="utf-8")
    config = {
        "seed": args.seed,
        "corpus": str(workdir / "reviews.jsonl"),
        "schema": str(workdir / "schema.json"),
        "curation": str(workdir / "curation.tsv"),
        "lexicon": str(workdir / "synonyms.tsv"),
        "patterns": str(workdir / "patterns.json"),
        "indicators": str(workdir / "indicators.tsv"),
        "run_dir": str(workdir / "run"),
        "tokenizer": {"name": "whitespace", "pos_lexicon": str(workdir / "pos.json")},
        "model": {"backend_options": {"dimension": 256}},
        "train": {"epochs": args.epochs, "learning_rate": 0.1},
        "eval": {"eval_per_pair": 1, "eval_pair_min": 4, "validation_size": 4},
    }
    config_path = workdir / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return config_path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", default="demo", help="where to put inputs and the run")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mps", type=int, default=6, help="minimum pair size for augment")
    parser.add_argument("--epochs", type=int, default=10)
    args = parser.parse_args(argv)

    config = write_workspace(Path(args.workdir), args)
    steps = [
        ["ingest"],
        ["mine"],
        ["curate-template"],
        ["build-dataset"],
        ["augment", "--mps", str(args.mps)],
        ["train"],
        ["calibrate"],
        ["evaluate"],
        ["extract", "--component", "Tire", "--aspect", "Durability"],
        ["compare-indicators"],
    ]
    for step in steps:
        print(f"\n$ revmine {' '.join(step)}")
        rc = revmine_main([step[0], "--config", str(config), *step[1:]])
        if rc != 0:
            print(f"step {step[0]} failed with exit code {rc}", file=sys.stderr)
            return rc
    print(f"\ndone; artifacts under {Path(args.workdir) / 'run'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
