"""Review ingestion, sentence splitting, and tokenization.

Reviews arrive as JSON-lines dumps (one object per line: review_id,
product_type, text). Sentences are produced by splitting review text on a
configurable terminator set and running each segment through a tokenizer
adapter that emits part-of-speech tagged tokens.
"""

from __future__ import annotations

import json
import logging
import re
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .errors import ConflictError, ParseError

log = logging.getLogger(__name__)

# Tagset every adapter must map into. is_particle is derived from "particle".
TAGSET = frozenset(
    {
        "noun",
        "verb",
        "adjective",
        "adverb",
        "particle",
        "auxiliary",
        "pronoun",
        "symbol",
        "number",
        "other",
    }
)

DEFAULT_TERMINATORS = ("。", "！", "？", ".", "!", "?")


@dataclass(frozen=True)
class RawReview:
    review_id: str
    product_type: str
    text: str


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str

    def __post_init__(self) -> None:
        if self.pos not in TAGSET:
            raise ParseError(f"unknown part-of-speech tag {self.pos!r} for {self.surface!r}")

    @property
    def is_particle(self) -> bool:
        return self.pos == "particle"


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    review_id: str
    surface: str
    tokens: tuple[Token, ...]

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


class Tokenizer(Protocol):
    """Adapter contract for morphological analysis.

    ``joiner`` is the string that recovers the sentence surface from token
    surfaces ("" for Japanese analyzers, " " for whitespace languages).
    """

    name: str
    joiner: str

    def tokenize(self, text: str) -> list[Token]: ...


class WhitespaceTokenizer:
    """Whitespace splitter with a POS lexicon, for tests and pre-segmented text.

    Unknown surfaces fall back to ``default_pos``.
    """

    name = "whitespace"
    joiner = " "

    def __init__(self, pos_lexicon: dict[str, str] | None = None, default_pos: str = "noun"):
        self.pos_lexicon = dict(pos_lexicon or {})
        self.default_pos = default_pos
        for surface, pos in self.pos_lexicon.items():
            if pos not in TAGSET:
                raise ParseError(f"POS lexicon maps {surface!r} to unknown tag {pos!r}")

    def tokenize(self, text: str) -> list[Token]:
        return [
            Token(surface=w, pos=self.pos_lexicon.get(w, self.default_pos))
            for w in text.split()
        ]


# First field of a MeCab feature string, mapped into TAGSET.
_MECAB_POS = {
    "名詞": "noun",
    "動詞": "verb",
    "形容詞": "adjective",
    "副詞": "adverb",
    "助詞": "particle",
    "助動詞": "auxiliary",
    "代名詞": "pronoun",
    "記号": "symbol",
    "補助記号": "symbol",
    "数詞": "number",
}


class MecabTokenizer:
    """Adapter around a MeCab executable.

    The binary and dictionary directory come from configuration, never from
    environment sniffing. Each output line is ``surface\\tfeature,...``; the
    first feature field is the coarse POS.
    """

    name = "mecab"
    joiner = ""

    def __init__(self, executable: str = "mecab", dicdir: str | None = None):
        self.executable = executable
        self.dicdir = dicdir

    @staticmethod
    def available(executable: str = "mecab") -> bool:
        return shutil.which(executable) is not None

    def tokenize(self, text: str) -> list[Token]:
        cmd = [self.executable]
        if self.dicdir:
            cmd += ["-d", self.dicdir]
        proc = subprocess.run(
            cmd, input=text, capture_output=True, text=True, check=True
        )
        tokens: list[Token] = []
        for line in proc.stdout.splitlines():
            if line == "EOS" or not line.strip():
                continue
            surface, _, feature = line.partition("\t")
            pos1 = feature.split(",", 1)[0]
            tokens.append(Token(surface=surface, pos=_MECAB_POS.get(pos1, "other")))
        return tokens


_TOKENIZERS = {"whitespace": WhitespaceTokenizer, "mecab": MecabTokenizer}


def make_tokenizer(name: str, **kwargs) -> Tokenizer:
    try:
        cls = _TOKENIZERS[name]
    except KeyError:
        raise ParseError(f"unknown tokenizer {name!r}; choose from {sorted(_TOKENIZERS)}")
    return cls(**kwargs)


def ingest(path: str | Path) -> list[RawReview]:
    """Read a JSON-lines review dump into RawReview records.

    Raises ParseError (naming the line) on malformed records and
    ConflictError on duplicated review ids.
    """
    reviews: list[RawReview] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ParseError(f"{path}: line {lineno}: record is not an object")
            missing = {"review_id", "product_type", "text"} - record.keys()
            if missing:
                raise ParseError(
                    f"{path}: line {lineno}: missing fields {sorted(missing)}"
                )
            review_id = str(record["review_id"])
            text = record["text"]
            if not isinstance(text, str) or not text.strip():
                raise ParseError(f"{path}: line {lineno}: empty review text")
            if review_id in seen:
                raise ConflictError(f"{path}: line {lineno}: duplicate review_id {review_id!r}")
            seen.add(review_id)
            reviews.append(
                RawReview(review_id=review_id, product_type=str(record["product_type"]), text=text)
            )
    return reviews


def split_segments(text: str, terminators: Sequence[str] = DEFAULT_TERMINATORS) -> list[str]:
    """Split review text on sentence terminators; empty segments are dropped."""
    pattern = "|".join(re.escape(t) for t in terminators)
    return [seg.strip() for seg in re.split(pattern, text) if seg.strip()]


def split_and_tokenize(
    reviews: Iterable[RawReview],
    tokenizer: Tokenizer,
    terminators: Sequence[str] = DEFAULT_TERMINATORS,
) -> list[Sentence]:
    """Split reviews into sentences and tokenize each one.

    A segment the analyzer fails on (or that yields no tokens) is skipped and
    logged; it is never dropped silently.
    """
    sentences: list[Sentence] = []
    for review in reviews:
        for i, segment in enumerate(split_segments(review.text, terminators)):
            try:
                tokens = tokenizer.tokenize(segment)
            except Exception:
                log.warning(
                    "skipping sentence %s#%d: analyzer failed on %r",
                    review.review_id, i, segment,
                )
                continue
            if not tokens:
                log.warning(
                    "skipping sentence %s#%d: no tokens produced from %r",
                    review.review_id, i, segment,
                )
                continue
            sentences.append(
                Sentence(
                    sentence_id=f"{review.review_id}#{i}",
                    review_id=review.review_id,
                    surface=segment,
                    tokens=tuple(tokens),
                )
            )
    return sentences


def save_sentences(sentences: Iterable[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(
                json.dumps(
                    {
                        "sentence_id": s.sentence_id,
                        "review_id": s.review_id,
                        "surface": s.surface,
                        "tokens": [{"surface": t.surface, "pos": t.pos} for t in s.tokens],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_sentences(path: str | Path) -> list[Sentence]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sentences.append(
                    Sentence(
                        sentence_id=rec["sentence_id"],
                        review_id=rec["review_id"],
                        surface=rec["surface"],
                        tokens=tuple(Token(t["surface"], t["pos"]) for t in rec["tokens"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}: line {lineno}: bad sentence record ({exc})") from exc
    return sentences
