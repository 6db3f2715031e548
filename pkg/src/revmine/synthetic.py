"""Deterministic synthetic corpora for desk-scale runs and tests.

Every sentence follows one template, "the <component> is <aspect-word>
<filler> <filler>", so labels are keyword-determined: a sentence's component
label is decided by its noun and its aspect label by its adjective. That
makes classifier quality a pure function of training signal, which is what
the desk-scale checks need.
"""

from __future__ import annotations

import random

from .augment import FileLexicon
from .corpus import Token
from .dataset import LabeledSentence
from .labels import LabelSchema

COMPONENTS = (
    "frame", "tire", "brake", "saddle", "spoke", "pedal", "chain",
    "wheel", "handlebar", "fork", "stem", "crank", "hub", "rim",
)
ASPECTS = ("durability", "weight", "comfort", "noise", "installation", "appearance", "price")

# Adjective keyword deciding each aspect label.
ASPECT_WORDS = {
    "durability": "fragile",
    "weight": "heavy",
    "comfort": "comfy",
    "noise": "noisy",
    "installation": "fiddly",
    "appearance": "sleek",
    "price": "pricey",
}

# Two adverb families; members of a family are mutual synonyms, which gives
# the augmentor label-preserving replacement targets.
FILLERS_1 = ("really", "quite", "very", "truly", "fairly", "rather")
FILLERS_2 = ("overall", "honestly", "frankly", "indeed", "somehow", "clearly")


def filler_lexicon(extra: dict[str, set[str]] | None = None) -> FileLexicon:
    """Lexicon mapping each filler adverb to the rest of its family."""
    entries: dict[str, frozenset[str]] = {}
    for family in (FILLERS_1, FILLERS_2):
        for word in family:
            entries[word] = frozenset(family) - {word}
    for word, syns in (extra or {}).items():
        entries[word] = frozenset(syns)
    return FileLexicon(entries)


def make_sentence(
    sentence_id: str,
    components: set[str],
    aspects: set[str],
    filler_1: str,
    filler_2: str,
) -> LabeledSentence:
    # Multi-label sentences mention every component, keeping labels
    # keyword-determined even off the single-label path.
    tokens = [Token("the", "particle")]
    for c in sorted(components):
        tokens.append(Token(c, "noun"))
    tokens.append(Token("is", "auxiliary"))
    for a in sorted(aspects):
        tokens.append(Token(ASPECT_WORDS[a], "adjective"))
    tokens.append(Token(filler_1, "adverb"))
    tokens.append(Token(filler_2, "adverb"))
    return LabeledSentence(
        sentence_id=sentence_id,
        text=" ".join(t.surface for t in tokens),
        component_labels=frozenset(components),
        aspect_labels=frozenset(aspects),
        tokens=tuple(tokens),
    )


def _fill_pairs(
    pair_sizes: dict[tuple[str, str], int], seed: int, id_prefix: str = "s"
) -> list[LabeledSentence]:
    rng = random.Random(seed)
    sentences = []
    serial = 0
    for (component, aspect), size in sorted(pair_sizes.items()):
        for _ in range(size):
            serial += 1
            sentences.append(
                make_sentence(
                    f"{id_prefix}{serial:04d}",
                    {component},
                    {aspect},
                    rng.choice(FILLERS_1),
                    rng.choice(FILLERS_2),
                )
            )
    return sentences


def separable_corpus(
    seed: int = 0, components: int = 4, aspects: int = 3, total: int = 314
) -> tuple[list[LabeledSentence], LabelSchema]:
    """Evenly covered cross-product; every pair is comfortably learnable."""
    schema = LabelSchema(
        product_type="synthetic",
        component_labels=COMPONENTS[:components],
        aspect_labels=ASPECTS[:aspects],
    )
    pairs = schema.pairs()
    sizes = {p: total // len(pairs) for p in pairs}
    for p in pairs[: total % len(pairs)]:
        sizes[p] += 1
    return _fill_pairs(sizes, seed), schema


def imbalanced_corpus(seed: int = 0) -> tuple[list[LabeledSentence], LabelSchema, FileLexicon]:
    """Four heavy pairs and four starved ones, plus a synonym lexicon.

    Major pairs hold 45 sentences each; minor pairs hold 7, so after the
    standard split (2 to evaluation, a few to validation) each minor pair
    keeps roughly 3 to 5 training sentences: enough to be eligible for
    augmentation and far too few to learn from otherwise.
    """
    schema = LabelSchema(
        product_type="synthetic-imbalanced",
        component_labels=("frame", "wheel", "chain", "pedal", "saddle", "spoke", "hub", "stem"),
        aspect_labels=("weight", "comfort", "noise", "durability"),
    )
    sizes: dict[tuple[str, str], int] = {
        ("frame", "weight"): 45,
        ("wheel", "comfort"): 45,
        ("chain", "noise"): 45,
        ("pedal", "weight"): 45,
        ("frame", "comfort"): 45,
        ("wheel", "noise"): 45,
        ("saddle", "comfort"): 7,
        ("spoke", "weight"): 7,
        ("hub", "noise"): 7,
        ("stem", "durability"): 7,
    }
    return _fill_pairs(sizes, seed), schema, filler_lexicon()


def table_layout_corpus(seed: int = 0) -> tuple[list[LabeledSentence], LabelSchema]:
    """500 single-pair sentences spread evenly over 50 pairs of a 14 x 7 schema."""
    schema = LabelSchema(
        product_type="synthetic-500", component_labels=COMPONENTS, aspect_labels=ASPECTS
    )
    pairs = schema.pairs()[:50]
    sizes = {p: 10 for p in pairs}
    return _fill_pairs(sizes, seed), schema
