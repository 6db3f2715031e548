"""Corpus n-gram index used to validate generated sentences.

Every k-gram (k = 1..n_max) of token surfaces occurring in the indexed
sentences is present with its occurrence count. Sentences are padded with
START/END markers so grams touching a sentence edge are queryable; the index
is frozen after construction and safe for concurrent readers.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from .corpus import Sentence
from .errors import ConfigError, ContractError

START = "<start>"
END = "<end>"


class NGramIndex:
    def __init__(self, n_max: int, counts: Counter[tuple[str, ...]]):
        self.n_max = n_max
        self._counts = counts

    def __contains__(self, gram: tuple[str, ...]) -> bool:
        return self.contains(gram)

    def __len__(self) -> int:
        return len(self._counts)

    def contains(self, gram: Sequence[str]) -> bool:
        """True iff the gram occurs in the indexed corpus (length 1..n_max)."""
        if not 1 <= len(gram) <= self.n_max:
            raise ContractError(
                f"gram length {len(gram)} outside 1..{self.n_max}: {tuple(gram)!r}"
            )
        return tuple(gram) in self._counts

    def count(self, gram: Sequence[str]) -> int:
        if not 1 <= len(gram) <= self.n_max:
            raise ContractError(
                f"gram length {len(gram)} outside 1..{self.n_max}: {tuple(gram)!r}"
            )
        return self._counts.get(tuple(gram), 0)


def padded_surfaces(surfaces: Sequence[str]) -> list[str]:
    return [START, *surfaces, END]


def build_ngram_index(
    sentences: Iterable[Sentence | Sequence[str]], n_max: int = 3
) -> NGramIndex:
    """Index every k-gram (k <= n_max) of token surfaces, edge markers included.

    Accepts Sentence objects or bare surface sequences. Trigram validation is
    the top of the fallback ladder, so n_max must be at least 3.
    """
    if n_max < 3:
        raise ConfigError(f"n_max must be >= 3, got {n_max}")
    counts: Counter[tuple[str, ...]] = Counter()
    for sentence in sentences:
        surfaces = sentence.surfaces if isinstance(sentence, Sentence) else tuple(sentence)
        padded = padded_surfaces(surfaces)
        for k in range(1, n_max + 1):
            for i in range(len(padded) - k + 1):
                counts[tuple(padded[i : i + k])] += 1
    return NGramIndex(n_max=n_max, counts=counts)
