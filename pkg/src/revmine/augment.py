"""Synonym-replacement augmentation with corpus n-gram validation.

Underfilled (component, aspect) pairs are grown to the minimum pair size by
replacing a single word of an existing sentence with a synonym and keeping
the result only when the corpus n-gram index contains the context gram
around the replacement. Validation starts at the widest configured gram and
falls back to narrower ones when the attempt budget runs out.
"""

from __future__ import annotations

import json
import logging
import random
import sqlite3
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .corpus import Token
from .dataset import AUGMENTED_PREFIX, LabeledSentence, PairMatrix, build_pair_matrix
from .errors import ConfigError, ContractError, ParseError
from .ngram import END, START, NGramIndex

log = logging.getLogger(__name__)

LEVEL_NAMES = {3: "trigram", 2: "bigram", 1: "unigram"}

# POS tags whose tokens are never replacement targets. Swapping function
# words produces ungrammatical output and dead lexicon lookups.
DEFAULT_EXCLUDED_POS = frozenset({"particle", "auxiliary", "symbol"})

REJECTION_REASONS = (
    "no_replaceable_words",
    "empty_synonyms",
    "gram_absent",
    "duplicate",
)


class SynonymLexicon(Protocol):
    def synonyms(self, word: str) -> frozenset[str]:
        """Synonym surfaces for a word; never contains the word itself."""
        ...


class FileLexicon:
    """TSV lexicon: word, tab, comma-separated synonyms."""

    def __init__(self, entries: dict[str, frozenset[str]]):
        self._entries = {w: s - {w} for w, s in entries.items()}

    @classmethod
    def from_path(cls, path: str | Path) -> "FileLexicon":
        entries: dict[str, set[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ParseError(f"{path}: line {lineno}: expected 2 tab-separated fields")
                word = parts[0].strip()
                syns = {s.strip() for s in parts[1].split(",") if s.strip()}
                entries.setdefault(word, set()).update(syns)
        return cls({w: frozenset(s) for w, s in entries.items()})

    def synonyms(self, word: str) -> frozenset[str]:
        return self._entries.get(word, frozenset())


class WordNetDBLexicon:
    """Synonyms from a WordNet sqlite database (word/sense/synset schema).

    Two lemmas are synonyms when they share a synset. Results are cached per
    word; the connection is read-only.
    """

    def __init__(self, db_path: str | Path, lang: str = "jpn"):
        self._conn = sqlite3.connect(f"file:{Path(db_path)}?mode=ro", uri=True)
        self._lang = lang
        self._cache: dict[str, frozenset[str]] = {}

    def synonyms(self, word: str) -> frozenset[str]:
        if word not in self._cache:
            rows = self._conn.execute(
                """
                SELECT DISTINCT w2.lemma
                FROM word w1
                JOIN sense s1 ON s1.wordid = w1.wordid
                JOIN sense s2 ON s2.synset = s1.synset
                JOIN word w2 ON w2.wordid = s2.wordid
                WHERE w1.lemma = ? AND w1.lang = ? AND w2.lang = ?
                """,
                (word, self._lang, self._lang),
            ).fetchall()
            self._cache[word] = frozenset(r[0] for r in rows) - {word}
        return self._cache[word]

    def close(self) -> None:
        self._conn.close()


@dataclass(frozen=True)
class WordUnit:
    """A replacement unit: a contiguous token span treated as one word."""

    surface: str
    pos: str
    start: int
    end: int  # token span [start, end)


class WordDivider(Protocol):
    def divide(self, tokens: Sequence[Token]) -> list[WordUnit]: ...


class TokenDivider:
    """One unit per token; the default division."""

    def divide(self, tokens: Sequence[Token]) -> list[WordUnit]:
        return [WordUnit(t.surface, t.pos, i, i + 1) for i, t in enumerate(tokens)]


class NounRunDivider:
    """Merge consecutive noun tokens into one compound-term unit."""

    def __init__(self, joiner: str = ""):
        self.joiner = joiner

    def divide(self, tokens: Sequence[Token]) -> list[WordUnit]:
        units: list[WordUnit] = []
        i = 0
        while i < len(tokens):
            j = i + 1
            if tokens[i].pos == "noun":
                while j < len(tokens) and tokens[j].pos == "noun":
                    j += 1
            surface = self.joiner.join(t.surface for t in tokens[i:j])
            units.append(WordUnit(surface, tokens[i].pos, i, j))
            i = j
        return units


@dataclass(frozen=True)
class AugmentationConfig:
    mps: int
    seed: int = 0
    eligibility_min: int = 3
    max_attempts_per_pair: int = 200
    ngram_levels: tuple[int, ...] = (3, 2, 1)

    def __post_init__(self) -> None:
        if self.mps < 0:
            raise ConfigError(f"mps must be >= 0, got {self.mps}")
        if self.eligibility_min < 1:
            raise ConfigError(f"eligibility_min must be >= 1, got {self.eligibility_min}")
        if self.max_attempts_per_pair < 1:
            raise ConfigError("max_attempts_per_pair must be >= 1")
        levels = tuple(self.ngram_levels)
        object.__setattr__(self, "ngram_levels", levels)
        if not levels or any(n < 1 for n in levels):
            raise ConfigError(f"ngram_levels must be non-empty, each >= 1: {levels}")
        if any(a <= b for a, b in zip(levels, levels[1:])):
            raise ConfigError(f"ngram_levels must be strictly decreasing: {levels}")


@dataclass(frozen=True)
class GeneratedSentence:
    sentence_id: str
    text: str
    tokens: tuple[Token, ...]
    source_id: str
    replaced_unit: int  # index of the replaced unit in the source division
    original_word: str
    synonym: str
    level: str  # validation level name: trigram, bigram, unigram
    component_labels: frozenset[str]
    aspect_labels: frozenset[str]

    def to_labeled(self) -> LabeledSentence:
        return LabeledSentence(
            sentence_id=self.sentence_id,
            text=self.text,
            component_labels=self.component_labels,
            aspect_labels=self.aspect_labels,
            provenance=f"{AUGMENTED_PREFIX}{self.source_id}",
            tokens=self.tokens,
        )


@dataclass(frozen=True)
class Rejection:
    reason: str  # one of REJECTION_REASONS

    def __post_init__(self) -> None:
        if self.reason not in REJECTION_REASONS:
            raise ContractError(f"unknown rejection reason {self.reason!r}")


def _gram_ok(index: NGramIndex, prev: str, new: str, nxt: str, level: int) -> bool:
    # 3: full context; 2: either adjacent pair; 1: the replacement alone
    if level == 3:
        return index.contains((prev, new, nxt))
    if level == 2:
        return index.contains((prev, new)) or index.contains((new, nxt))
    if level == 1:
        return index.contains((new,))
    raise ContractError(f"unsupported validation level {level}")


def generate_similar_sentence(
    pool: Sequence[LabeledSentence],
    lexicon: SynonymLexicon,
    index: NGramIndex,
    level: int,
    rng: random.Random,
    *,
    new_id: str,
    divider: WordDivider | None = None,
    joiner: str = " ",
    excluded_pos: frozenset[str] = DEFAULT_EXCLUDED_POS,
) -> GeneratedSentence | Rejection:
    """One generation attempt: pick a sentence, a word, a synonym; validate.

    Draws are seeded-uniform from ``rng``. The validation gram is built from
    the synonym and the neighboring unit surfaces, with sentence-edge
    neighbors taken as the index boundary markers.
    """
    if not pool:
        raise ContractError("generation needs at least one source sentence")
    divider = divider or TokenDivider()
    source = rng.choice(list(pool))
    units = divider.divide(source.tokens)
    replaceable = [
        i for i, u in enumerate(units) if u.pos not in excluded_pos and u.surface.strip()
    ]
    if not replaceable:
        return Rejection("no_replaceable_words")
    unit_idx = rng.choice(replaceable)
    unit = units[unit_idx]
    synonyms = sorted(lexicon.synonyms(unit.surface) - {unit.surface})
    if not synonyms:
        return Rejection("empty_synonyms")
    synonym = rng.choice(synonyms)

    prev = units[unit_idx - 1].surface if unit_idx > 0 else START
    nxt = units[unit_idx + 1].surface if unit_idx + 1 < len(units) else END
    if not _gram_ok(index, prev, synonym, nxt, level):
        return Rejection("gram_absent")

    tokens = (
        tuple(source.tokens[: unit.start])
        + (Token(synonym, unit.pos),)
        + tuple(source.tokens[unit.end :])
    )
    return GeneratedSentence(
        sentence_id=new_id,
        text=joiner.join(t.surface for t in tokens),
        tokens=tokens,
        source_id=source.sentence_id,
        replaced_unit=unit_idx,
        original_word=unit.surface,
        synonym=synonym,
        level=LEVEL_NAMES.get(level, str(level)),
        component_labels=source.component_labels,
        aspect_labels=source.aspect_labels,
    )


@dataclass(frozen=True)
class PairRecord:
    component: str
    aspect: str
    before: int
    after: int
    generated_by_level: dict[str, int]
    attempts_by_level: dict[str, int]
    deficient: bool


@dataclass
class AugmentationReport:
    mps: int
    pair_records: list[PairRecord] = field(default_factory=list)
    generated_sentences: list[GeneratedSentence] = field(default_factory=list)
    attempts: int = 0
    rejections: Counter = field(default_factory=Counter)
    pairs_processed: int = 0
    pairs_ineligible: int = 0
    pairs_satisfied: int = 0

    @property
    def generated_total(self) -> int:
        return len(self.generated_sentences)

    def deficient_pairs(self) -> list[tuple[str, str]]:
        return [(r.component, r.aspect) for r in self.pair_records if r.deficient]


def balance_to_mps(
    train: Sequence[LabeledSentence],
    matrix: PairMatrix,
    lexicon: SynonymLexicon,
    index: NGramIndex,
    config: AugmentationConfig,
    *,
    divider: WordDivider | None = None,
    joiner: str = " ",
    excluded_pos: frozenset[str] = DEFAULT_EXCLUDED_POS,
) -> tuple[list[LabeledSentence], AugmentationReport]:
    """Grow every eligible underfilled pair to the minimum pair size.

    A pair is processed when it holds at least ``eligibility_min`` and fewer
    than ``mps`` sentences. Each configured gram level gets its own attempt
    budget; accepted sentences join the pair's source pool, so later draws
    may build on them. Exact-duplicate texts within a pair are rejected.

    Pairs are processed under a seed derived from the pair's position in the
    schema cross-product, so results do not depend on processing order. The
    report covers processed pairs only; skipped pairs appear in the global
    counters.
    """
    expected = build_pair_matrix(train, matrix.schema)
    if expected.counts != matrix.counts:
        raise ContractError("pair matrix is inconsistent with the dataset")

    report = AugmentationReport(mps=config.mps)
    by_pair: dict[tuple[str, str], list[LabeledSentence]] = {}
    for s in train:
        for pair in s.pairs():
            by_pair.setdefault(pair, []).append(s)

    augmented: list[LabeledSentence] = list(train)
    for pair_index, pair in enumerate(matrix.schema.pairs()):
        before = matrix.count(*pair)
        if before == 0:
            continue
        if before < config.eligibility_min:
            report.pairs_ineligible += 1
            continue
        if before >= config.mps:
            report.pairs_satisfied += 1
            continue

        report.pairs_processed += 1
        rng = random.Random(config.seed ^ pair_index)
        pool = sorted(by_pair[pair], key=lambda s: s.sentence_id)
        texts = {s.text for s in pool}
        component, aspect = pair
        accepted: list[GeneratedSentence] = []
        generated_by_level = {LEVEL_NAMES.get(n, str(n)): 0 for n in config.ngram_levels}
        attempts_by_level = dict.fromkeys(generated_by_level, 0)

        for level in config.ngram_levels:
            level_name = LEVEL_NAMES.get(level, str(level))
            while (
                before + len(accepted) < config.mps
                and attempts_by_level[level_name] < config.max_attempts_per_pair
            ):
                attempts_by_level[level_name] += 1
                report.attempts += 1
                new_id = f"aug--{component}--{aspect}--{len(accepted) + 1:04d}"
                outcome = generate_similar_sentence(
                    pool,
                    lexicon,
                    index,
                    level,
                    rng,
                    new_id=new_id,
                    divider=divider,
                    joiner=joiner,
                    excluded_pos=excluded_pos,
                )
                if isinstance(outcome, Rejection):
                    report.rejections[outcome.reason] += 1
                    continue
                if outcome.text in texts:
                    report.rejections["duplicate"] += 1
                    continue
                texts.add(outcome.text)
                accepted.append(outcome)
                generated_by_level[level_name] += 1
                pool.append(outcome.to_labeled())

        after = before + len(accepted)
        deficient = after < config.mps
        if deficient:
            log.warning(
                "pair (%s, %s) deficient: %d < MPS %d", component, aspect, after, config.mps
            )
        report.pair_records.append(
            PairRecord(
                component=component,
                aspect=aspect,
                before=before,
                after=after,
                generated_by_level=generated_by_level,
                attempts_by_level=attempts_by_level,
                deficient=deficient,
            )
        )
        report.generated_sentences.extend(accepted)
        augmented.extend(g.to_labeled() for g in accepted)

    return augmented, report


def save_report_tsv(report: AugmentationReport, path: str | Path) -> None:
    levels = sorted(
        {name for r in report.pair_records for name in r.generated_by_level},
        key=lambda n: list(LEVEL_NAMES.values()).index(n) if n in LEVEL_NAMES.values() else 99,
    )
    with open(path, "w", encoding="utf-8") as fh:
        gen_cols = "\t".join(f"generated_{n}" for n in levels)
        att_cols = "\t".join(f"attempts_{n}" for n in levels)
        fh.write(f"component\taspect\tbefore\tafter\t{gen_cols}\t{att_cols}\tdeficient\n")
        for r in report.pair_records:
            gen = "\t".join(str(r.generated_by_level.get(n, 0)) for n in levels)
            att = "\t".join(str(r.attempts_by_level.get(n, 0)) for n in levels)
            fh.write(
                f"{r.component}\t{r.aspect}\t{r.before}\t{r.after}\t{gen}\t{att}"
                f"\t{int(r.deficient)}\n"
            )


def save_report_json(report: AugmentationReport, path: str | Path) -> None:
    payload = {
        "mps": report.mps,
        "attempts": report.attempts,
        "generated_total": report.generated_total,
        "rejections": dict(report.rejections),
        "pairs_processed": report.pairs_processed,
        "pairs_ineligible": report.pairs_ineligible,
        "pairs_satisfied": report.pairs_satisfied,
        "deficient_pairs": [list(p) for p in report.deficient_pairs()],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
