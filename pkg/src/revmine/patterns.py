"""Token-sequence patterns that mine component-name and aspect-word candidates.

A rule is an ordered list of elements: literals matched by token surface and
slots matched by POS membership. Matching is leftmost and greedy: at the
earliest start position admitting a match, each slot absorbs as many tokens
as possible (earlier slots win ties), and scanning resumes past the match so
matches never overlap. Anything after the final element is an unconstrained
tail; a rule does not need to reach the end of the sentence.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import TAGSET, Sentence
from .errors import SchemaError

ROLES = ("component", "aspect")

# Token surfaces inside a multi-token slot are joined with this separator.
SLOT_JOINER = " "


@dataclass(frozen=True)
class Literal:
    surface: str


@dataclass(frozen=True)
class Slot:
    role: str
    pos: frozenset[str]
    max_tokens: int = 1


@dataclass(frozen=True)
class PatternRule:
    name: str
    elements: tuple[Literal | Slot, ...]

    def slot_roles(self) -> list[str]:
        return [e.role for e in self.elements if isinstance(e, Slot)]


@dataclass(frozen=True)
class PatternMatch:
    sentence_id: str
    rule_name: str
    component_surface: str
    aspect_surface: str
    component_span: tuple[int, int]  # [start, end) token offsets
    aspect_span: tuple[int, int]


def compile_pattern(spec: dict) -> PatternRule:
    """Validate a declarative rule entry into a PatternRule.

    The entry must declare exactly one component slot and one aspect slot;
    literals must be non-empty and slot POS constraints must come from the
    configured tagset.
    """
    name = spec.get("name", "")
    elements: list[Literal | Slot] = []
    for i, entry in enumerate(spec.get("elements", [])):
        if "literal" in entry:
            surface = entry["literal"]
            if not surface:
                raise SchemaError(f"rule {name!r}: element {i}: empty literal")
            elements.append(Literal(surface=surface))
        elif "slot" in entry:
            role = entry["slot"]
            if role not in ROLES:
                raise SchemaError(f"rule {name!r}: element {i}: unknown slot role {role!r}")
            pos = frozenset(entry.get("pos", []))
            bad = pos - TAGSET
            if not pos or bad:
                raise SchemaError(
                    f"rule {name!r}: element {i}: bad POS constraint {sorted(bad) or '(empty)'}"
                )
            max_tokens = int(entry.get("max_tokens", 1))
            if max_tokens < 1:
                raise SchemaError(f"rule {name!r}: element {i}: max_tokens must be >= 1")
            elements.append(Slot(role=role, pos=pos, max_tokens=max_tokens))
        else:
            raise SchemaError(f"rule {name!r}: element {i}: neither literal nor slot")
    rule = PatternRule(name=name, elements=tuple(elements))
    roles = rule.slot_roles()
    for role in ROLES:
        if roles.count(role) != 1:
            raise SchemaError(
                f"rule {name!r}: needs exactly one {role} slot, found {roles.count(role)}"
            )
    return rule


def load_pattern_rules(path: str | Path) -> list[PatternRule]:
    with open(path, encoding="utf-8") as fh:
        specs = json.load(fh)
    return [compile_pattern(spec) for spec in specs]


def _match_at(rule: PatternRule, sentence: Sentence, start: int) -> dict | None:
    """Greedy backtracking match anchored at ``start``.

    Explores slot widths from max_tokens down to 1, so the first complete
    match carries the lexicographically greatest slot-width sequence.
    Returns slot spans plus the match end, or None.
    """
    tokens = sentence.tokens
    spans: dict[str, tuple[int, int]] = {}

    def descend(elem_idx: int, pos: int) -> int | None:
        if elem_idx == len(rule.elements):
            return pos
        elem = rule.elements[elem_idx]
        if isinstance(elem, Literal):
            if pos < len(tokens) and tokens[pos].surface == elem.surface:
                return descend(elem_idx + 1, pos + 1)
            return None
        limit = min(elem.max_tokens, len(tokens) - pos)
        for width in range(limit, 0, -1):
            if all(tokens[pos + j].pos in elem.pos for j in range(width)):
                end = descend(elem_idx + 1, pos + width)
                if end is not None:
                    spans[elem.role] = (pos, pos + width)
                    return end
        return None

    end = descend(0, start)
    if end is None:
        return None
    return {"spans": spans, "end": end}


def match_sentence(rule: PatternRule, sentence: Sentence) -> list[PatternMatch]:
    """All non-overlapping leftmost-greedy matches of ``rule`` in ``sentence``."""
    matches: list[PatternMatch] = []
    i = 0
    n = len(sentence.tokens)
    while i < n:
        found = _match_at(rule, sentence, i)
        if found is None:
            i += 1
            continue
        spans = found["spans"]
        c_span, a_span = spans["component"], spans["aspect"]
        surfaces = sentence.surfaces
        matches.append(
            PatternMatch(
                sentence_id=sentence.sentence_id,
                rule_name=rule.name,
                component_surface=SLOT_JOINER.join(surfaces[c_span[0] : c_span[1]]),
                aspect_surface=SLOT_JOINER.join(surfaces[a_span[0] : a_span[1]]),
                component_span=c_span,
                aspect_span=a_span,
            )
        )
        i = found["end"]
    return matches


@dataclass(frozen=True)
class CandidateRow:
    surface: str
    count: int
    co_occurring: tuple[tuple[str, int], ...]  # other-role surfaces, count desc


@dataclass(frozen=True)
class CandidateTable:
    role: str
    rows: tuple[CandidateRow, ...]

    def total_count(self) -> int:
        return sum(r.count for r in self.rows)

    def as_dict(self) -> dict[str, int]:
        return {r.surface: r.count for r in self.rows}


def _sorted_items(counter: Counter[str]) -> list[tuple[str, int]]:
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))


def _build_table(role: str, counts: Counter[str], co: dict[str, Counter[str]]) -> CandidateTable:
    rows = tuple(
        CandidateRow(surface=s, count=c, co_occurring=tuple(_sorted_items(co[s])))
        for s, c in _sorted_items(counts)
    )
    return CandidateTable(role=role, rows=rows)


def mine_candidates(
    sentences: Iterable[Sentence], rules: Sequence[PatternRule]
) -> tuple[CandidateTable, CandidateTable]:
    """Frequency tables of component and aspect candidates over all matches.

    One candidate is counted per match (a sentence matching twice counts
    twice). Rows are sorted by count descending, ties by surface ascending,
    so identical inputs produce byte-identical tables.
    """
    if not rules:
        raise SchemaError("mine_candidates requires at least one rule")
    comp_counts: Counter[str] = Counter()
    asp_counts: Counter[str] = Counter()
    comp_co: dict[str, Counter[str]] = defaultdict(Counter)
    asp_co: dict[str, Counter[str]] = defaultdict(Counter)
    for sentence in sentences:
        for rule in rules:
            for m in match_sentence(rule, sentence):
                comp_counts[m.component_surface] += 1
                asp_counts[m.aspect_surface] += 1
                comp_co[m.component_surface][m.aspect_surface] += 1
                asp_co[m.aspect_surface][m.component_surface] += 1
    return (
        _build_table("component", comp_counts, comp_co),
        _build_table("aspect", asp_counts, asp_co),
    )


def save_candidates_tsv(table: CandidateTable, path: str | Path, co_limit: int = 5) -> None:
    """Export a table as TSV: surface, count, top co-occurring surfaces."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("surface\tcount\tco_occurring\n")
        for row in table.rows:
            co = ",".join(f"{s}:{c}" for s, c in row.co_occurring[:co_limit])
            fh.write(f"{row.surface}\t{row.count}\t{co}\n")
