"""Labeled sentences, the (component x aspect) pair matrix, and the
train/validation/evaluation split.

A sentence may carry several labels of each role; it then counts in every
(component, aspect) cell of the cross-product of its label sets. Row and
column totals are distinct-sentence counts per label, so a multi-aspect
sentence inflates cell sums above its row total.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Token
from .errors import ParseError, SchemaError, SplitError
from .labels import LabelSchema

HUMAN = "human"
AUGMENTED_PREFIX = "augmented:"


@dataclass(frozen=True)
class LabeledSentence:
    sentence_id: str
    text: str
    component_labels: frozenset[str]
    aspect_labels: frozenset[str]
    provenance: str = HUMAN  # "human" or "augmented:<source sentence id>"
    tokens: tuple[Token, ...] = ()  # tagged tokens, kept when known

    @property
    def is_augmented(self) -> bool:
        return self.provenance.startswith(AUGMENTED_PREFIX)

    @property
    def source_id(self) -> str | None:
        if self.is_augmented:
            return self.provenance[len(AUGMENTED_PREFIX):]
        return None

    def pairs(self) -> list[tuple[str, str]]:
        return [(c, a) for c in sorted(self.component_labels) for a in sorted(self.aspect_labels)]


def label_sentence(sentence, components: Iterable[str], aspects: Iterable[str]) -> LabeledSentence:
    """Attach label sets to a tokenized corpus sentence."""
    return LabeledSentence(
        sentence_id=sentence.sentence_id,
        text=sentence.surface,
        component_labels=frozenset(components),
        aspect_labels=frozenset(aspects),
        tokens=tuple(sentence.tokens),
    )


def validate_dataset(sentences: Sequence[LabeledSentence], schema: LabelSchema) -> None:
    seen: set[str] = set()
    for s in sentences:
        if s.sentence_id in seen:
            raise SchemaError(f"duplicate sentence_id {s.sentence_id!r}")
        seen.add(s.sentence_id)
        if not s.component_labels or not s.aspect_labels:
            raise SchemaError(f"sentence {s.sentence_id!r}: needs a label of each role")
        unknown = (s.component_labels - set(schema.component_labels)) | (
            s.aspect_labels - set(schema.aspect_labels)
        )
        if unknown:
            raise SchemaError(f"sentence {s.sentence_id!r}: unknown labels {sorted(unknown)}")


def load_dataset(path: str | Path) -> list[LabeledSentence]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sentences.append(
                    LabeledSentence(
                        sentence_id=rec["sentence_id"],
                        text=rec["text"],
                        component_labels=frozenset(rec["component_labels"]),
                        aspect_labels=frozenset(rec["aspect_labels"]),
                        provenance=rec.get("provenance", HUMAN),
                        tokens=tuple(
                            Token(t["surface"], t["pos"]) for t in rec.get("tokens", ())
                        ),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}: line {lineno}: bad dataset record ({exc})") from exc
    return sentences


def save_dataset(sentences: Iterable[LabeledSentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            rec = {
                "sentence_id": s.sentence_id,
                "text": s.text,
                "component_labels": sorted(s.component_labels),
                "aspect_labels": sorted(s.aspect_labels),
                "provenance": s.provenance,
            }
            if s.tokens:
                rec["tokens"] = [{"surface": t.surface, "pos": t.pos} for t in s.tokens]
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class PairMatrix:
    schema: LabelSchema
    counts: dict[tuple[str, str], int]
    row_totals: dict[str, int]  # distinct sentences mentioning the component
    col_totals: dict[str, int]  # distinct sentences mentioning the aspect

    def count(self, component: str, aspect: str) -> int:
        return self.counts.get((component, aspect), 0)

    def cells(self) -> list[tuple[tuple[str, str], int]]:
        return [(pair, self.count(*pair)) for pair in self.schema.pairs()]

    def nonzero_pairs(self) -> list[tuple[str, str]]:
        return [pair for pair, n in self.cells() if n > 0]


def build_pair_matrix(sentences: Sequence[LabeledSentence], schema: LabelSchema) -> PairMatrix:
    """Exact co-occurrence counts: count(c, a) = sentences labeled with both."""
    validate_dataset(sentences, schema)
    counts: dict[tuple[str, str], int] = {}
    row_totals = {c: 0 for c in schema.component_labels}
    col_totals = {a: 0 for a in schema.aspect_labels}
    for s in sentences:
        for c in s.component_labels:
            row_totals[c] += 1
        for a in s.aspect_labels:
            col_totals[a] += 1
        for pair in s.pairs():
            counts[pair] = counts.get(pair, 0) + 1
    return PairMatrix(schema=schema, counts=counts, row_totals=row_totals, col_totals=col_totals)


def save_matrix_tsv(matrix: PairMatrix, path: str | Path) -> None:
    schema = matrix.schema
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("component\t" + "\t".join(schema.aspect_labels) + "\ttotal\n")
        for c in schema.component_labels:
            cells = "\t".join(str(matrix.count(c, a)) for a in schema.aspect_labels)
            fh.write(f"{c}\t{cells}\t{matrix.row_totals[c]}\n")
        totals = "\t".join(str(matrix.col_totals[a]) for a in schema.aspect_labels)
        fh.write(f"total\t{totals}\t\n")


@dataclass(frozen=True)
class Histogram:
    bucket_width: int
    buckets: tuple[tuple[int, int, int], ...]  # (lo, hi inclusive, pair count)
    small_pair_cut: int
    small_pairs: int  # pairs with <= small_pair_cut sentences

    def as_csv_rows(self) -> list[tuple[int, int, int]]:
        return list(self.buckets)


def pair_histogram(matrix: PairMatrix, bucket_width: int, small_pair_cut: int = 10) -> Histogram:
    """Histogram of pair sizes over every schema pair, zero cells included.

    Buckets are [k*w, (k+1)*w - 1] and cover 0..max cell count; the report
    also carries the number of pairs at or below ``small_pair_cut``.
    """
    if bucket_width < 1:
        raise SchemaError(f"bucket_width must be >= 1, got {bucket_width}")
    sizes = [n for _, n in matrix.cells()]
    top = max(sizes) if sizes else 0
    n_buckets = top // bucket_width + 1
    buckets = []
    for k in range(n_buckets):
        lo, hi = k * bucket_width, (k + 1) * bucket_width - 1
        buckets.append((lo, hi, sum(1 for n in sizes if lo <= n <= hi)))
    return Histogram(
        bucket_width=bucket_width,
        buckets=tuple(buckets),
        small_pair_cut=small_pair_cut,
        small_pairs=sum(1 for n in sizes if n <= small_pair_cut),
    )


def save_histogram_csv(histogram: Histogram, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bucket_lo,bucket_hi,pairs\n")
        for lo, hi, n in histogram.buckets:
            fh.write(f"{lo},{hi},{n}\n")


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    eval_per_pair: int = 2
    eval_pair_min: int = 5
    validation_size: int = 50

    def __post_init__(self) -> None:
        if self.eval_per_pair >= self.eval_pair_min:
            raise SchemaError(
                f"eval_per_pair ({self.eval_per_pair}) must be < eval_pair_min ({self.eval_pair_min})"
            )


@dataclass(frozen=True)
class Split:
    train: tuple[LabeledSentence, ...]
    validation: tuple[LabeledSentence, ...]
    evaluation: tuple[LabeledSentence, ...]


def split_dataset(
    sentences: Sequence[LabeledSentence], schema: LabelSchema, spec: SplitSpec
) -> Split:
    """Draw the evaluation and validation partitions; the rest is training.

    From each pair with at least ``eval_pair_min`` human sentences,
    ``eval_per_pair`` sentences are drawn seeded-uniformly for evaluation; a
    multi-pair sentence drawn via one pair leaves all pairs. Validation then
    draws ``validation_size`` sentences from the human remainder. Augmented
    sentences never enter validation or evaluation. Pairs are visited in
    schema order and pools kept id-sorted, so a fixed seed reproduces the
    partitions exactly.
    """
    validate_dataset(sentences, schema)
    rng = random.Random(spec.seed)
    human = [s for s in sentences if not s.is_augmented]

    by_pair: dict[tuple[str, str], list[LabeledSentence]] = {p: [] for p in schema.pairs()}
    for s in human:
        for pair in s.pairs():
            by_pair[pair].append(s)

    taken: set[str] = set()
    evaluation: list[LabeledSentence] = []
    for pair in schema.pairs():
        pool_all = sorted(by_pair[pair], key=lambda s: s.sentence_id)
        if len(pool_all) < spec.eval_pair_min:
            continue
        pool = [s for s in pool_all if s.sentence_id not in taken]
        for s in rng.sample(pool, min(spec.eval_per_pair, len(pool))):
            taken.add(s.sentence_id)
            evaluation.append(s)

    remainder = [s for s in human if s.sentence_id not in taken]
    if len(remainder) < spec.validation_size:
        raise SplitError(
            f"validation needs {spec.validation_size} sentences but only "
            f"{len(remainder)} remain after the evaluation draw "
            f"(short by {spec.validation_size - len(remainder)})"
        )
    remainder.sort(key=lambda s: s.sentence_id)
    validation = rng.sample(remainder, spec.validation_size)
    for s in validation:
        taken.add(s.sentence_id)

    train = [s for s in sentences if s.sentence_id not in taken]
    return Split(train=tuple(train), validation=tuple(validation), evaluation=tuple(evaluation))
