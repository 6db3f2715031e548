"""Shared fixtures: a pre-segmented Japanese POS lexicon, the two stock
mining patterns, and small factories for sentences and datasets."""

from __future__ import annotations

import pytest

from revmine.corpus import Sentence, Token, WhitespaceTokenizer
from revmine.dataset import LabeledSentence
from revmine.labels import LabelSchema
from revmine.patterns import compile_pattern

# Covers every surface used by the pattern golden sentences plus a few
# extras for corpus-level tests. Text fed through this lexicon must be
# pre-segmented (tokens separated by spaces).
JP_POS = {
    "ブレーキ": "noun",
    "タイヤ": "noun",
    "スポーク": "noun",
    "サドル": "noun",
    "効き": "noun",
    "パンク": "noun",
    "耐久": "noun",
    "性": "noun",
    "重さ": "noun",
    "の": "particle",
    "が": "particle",
    "は": "particle",
    "悪い": "adjective",
    "高い": "adjective",
    "良い": "adjective",
    "した": "verb",
    "折れた": "verb",
    "とても": "adverb",
    "かなり": "adverb",
    "非常に": "adverb",
    "です": "auxiliary",
    "。": "symbol",
}

# The two stock mining rules. Pattern 1 reads "<component> の <aspect>",
# pattern 2 reads "<component> が <aspect>"; both allow the aspect slot to
# absorb two tokens so verb compounds like "パンク した" stay whole.
PATTERN_1 = {
    "name": "no-pattern",
    "elements": [
        {"slot": "component", "pos": ["noun"], "max_tokens": 2},
        {"literal": "の"},
        {"slot": "aspect", "pos": ["noun", "adjective", "verb"], "max_tokens": 2},
    ],
}
PATTERN_2 = {
    "name": "ga-pattern",
    "elements": [
        {"slot": "component", "pos": ["noun"], "max_tokens": 1},
        {"literal": "が"},
        {"slot": "aspect", "pos": ["adjective", "verb", "noun"], "max_tokens": 2},
    ],
}


@pytest.fixture
def jp_tokenizer() -> WhitespaceTokenizer:
    return WhitespaceTokenizer(pos_lexicon=JP_POS)


@pytest.fixture
def jp_sentence(jp_tokenizer):
    """Factory: pre-segmented Japanese text -> tokenized Sentence."""

    counter = {"n": 0}

    def make(text: str, sentence_id: str | None = None) -> Sentence:
        counter["n"] += 1
        return Sentence(
            sentence_id=sentence_id or f"jp{counter['n']:03d}",
            review_id="r1",
            surface=text,
            tokens=tuple(jp_tokenizer.tokenize(text)),
        )

    return make


@pytest.fixture
def rule_no():
    return compile_pattern(PATTERN_1)


@pytest.fixture
def rule_ga():
    return compile_pattern(PATTERN_2)


@pytest.fixture
def tiny_schema() -> LabelSchema:
    return LabelSchema(
        product_type="bicycle",
        component_labels=("Tire", "Brake"),
        aspect_labels=("Durability", "Weight"),
    )


def make_labeled(
    sentence_id: str,
    components: set[str],
    aspects: set[str],
    words: list[tuple[str, str]] | None = None,
    provenance: str = "human",
) -> LabeledSentence:
    """Hand-built labeled sentence; ``words`` are (surface, pos) pairs."""
    tokens = tuple(Token(surface, pos) for surface, pos in (words or []))
    text = " ".join(t.surface for t in tokens) if tokens else sentence_id
    return LabeledSentence(
        sentence_id=sentence_id,
        text=text,
        component_labels=frozenset(components),
        aspect_labels=frozenset(aspects),
        provenance=provenance,
        tokens=tokens,
    )
