"""Curated component/aspect label schemas, candidate curation, and
indicator-coverage comparison.

Curation is file-driven: the CLI emits a template pre-filled with mined
candidate surfaces ranked by frequency, a human fills in dispositions, and
the edited file is re-ingested. Semantic equivalence between a schema label
and an external indicator is always a human annotation; only exact string
matches are computed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError, SchemaError
from .patterns import ROLES, CandidateTable

DISPOSITIONS = ("map", "improper", "ignore")


@dataclass(frozen=True)
class LabelSchema:
    product_type: str
    component_labels: tuple[str, ...]
    aspect_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        for role, labels in (("component", self.component_labels), ("aspect", self.aspect_labels)):
            if not labels:
                raise SchemaError(f"{role} label set is empty")
            dupes = {l for l in labels if labels.count(l) > 1}
            if dupes:
                raise SchemaError(f"duplicate {role} labels: {sorted(dupes)}")

    def labels_for(self, role: str) -> tuple[str, ...]:
        if role == "component":
            return self.component_labels
        if role == "aspect":
            return self.aspect_labels
        raise SchemaError(f"unknown role {role!r}")

    def pairs(self) -> list[tuple[str, str]]:
        return [(c, a) for c in self.component_labels for a in self.aspect_labels]


def load_schema(path: str | Path) -> LabelSchema:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc.msg})") from exc
    try:
        return LabelSchema(
            product_type=data["product_type"],
            component_labels=tuple(data["component_labels"]),
            aspect_labels=tuple(data["aspect_labels"]),
        )
    except KeyError as exc:
        raise ParseError(f"{path}: missing field {exc}") from exc


@dataclass(frozen=True)
class CurationEntry:
    surface: str
    role: str
    disposition: str  # map | improper | ignore
    target: str = ""


@dataclass(frozen=True)
class CurationMap:
    entries: dict[tuple[str, str], CurationEntry]  # keyed by (surface, role)

    @classmethod
    def from_entries(cls, entries: Iterable[CurationEntry], schema: LabelSchema) -> "CurationMap":
        table: dict[tuple[str, str], CurationEntry] = {}
        for e in entries:
            if e.role not in ROLES:
                raise SchemaError(f"curation entry {e.surface!r}: unknown role {e.role!r}")
            if e.disposition not in DISPOSITIONS:
                raise SchemaError(
                    f"curation entry {e.surface!r}: unknown disposition {e.disposition!r}"
                )
            if e.disposition == "map" and e.target not in schema.labels_for(e.role):
                raise SchemaError(
                    f"curation entry {e.surface!r} maps to unknown {e.role} label {e.target!r}"
                )
            key = (e.surface, e.role)
            if key in table:
                raise SchemaError(f"duplicate curation entry for {key}")
            table[key] = e
        return cls(entries=table)


def load_curation(path: str | Path, schema: LabelSchema) -> CurationMap:
    """Read a curation TSV: surface, role, disposition, target.

    Rows with an empty disposition are not-yet-curated and are skipped, so a
    partially edited template still loads.
    """
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#") or line.startswith("surface\t"):
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise ParseError(f"{path}: line {lineno}: expected >= 3 tab-separated fields")
            surface, role, disposition = parts[0], parts[1], parts[2]
            target = parts[3] if len(parts) > 3 else ""
            if not disposition:
                continue
            entries.append(
                CurationEntry(surface=surface, role=role, disposition=disposition, target=target)
            )
    return CurationMap.from_entries(entries, schema)


def write_curation_template(
    candidates: CandidateTable, path: str | Path, curation: CurationMap | None = None
) -> None:
    """Emit an editable TSV of candidate surfaces ranked by frequency.

    Existing dispositions are carried over so re-running after more mining
    never discards human work.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("surface\trole\tdisposition\ttarget\tcount\n")
        for row in candidates.rows:
            prior = curation.entries.get((row.surface, candidates.role)) if curation else None
            disposition = prior.disposition if prior else ""
            target = prior.target if prior else ""
            fh.write(f"{row.surface}\t{candidates.role}\t{disposition}\t{target}\t{row.count}\n")


@dataclass
class CurationReport:
    role: str
    mapped: dict[str, int]  # schema label -> candidate occurrences absorbed
    mapped_surfaces: dict[str, list[str]]
    improper: list[tuple[str, int]]
    ignored: list[tuple[str, int]]
    unresolved: list[tuple[str, int]]

    def classified_rows(self) -> int:
        return (
            sum(len(v) for v in self.mapped_surfaces.values())
            + len(self.improper)
            + len(self.ignored)
            + len(self.unresolved)
        )


def apply_curation(candidates: CandidateTable, curation: CurationMap) -> CurationReport:
    """Classify every candidate surface as mapped, improper, ignored, or
    unresolved, and count the occurrences each schema label absorbs."""
    mapped: dict[str, int] = {}
    mapped_surfaces: dict[str, list[str]] = {}
    improper: list[tuple[str, int]] = []
    ignored: list[tuple[str, int]] = []
    unresolved: list[tuple[str, int]] = []
    for row in candidates.rows:
        entry = curation.entries.get((row.surface, candidates.role))
        if entry is None:
            unresolved.append((row.surface, row.count))
        elif entry.disposition == "map":
            mapped[entry.target] = mapped.get(entry.target, 0) + row.count
            mapped_surfaces.setdefault(entry.target, []).append(row.surface)
        elif entry.disposition == "improper":
            improper.append((row.surface, row.count))
        else:
            ignored.append((row.surface, row.count))
    return CurationReport(
        role=candidates.role,
        mapped=mapped,
        mapped_surfaces=mapped_surfaces,
        improper=improper,
        ignored=ignored,
        unresolved=unresolved,
    )


@dataclass(frozen=True)
class Indicator:
    name: str
    role: str
    source: str
    semantic: bool  # human judgment that the indicator matches some label


def load_indicators(path: str | Path) -> list[Indicator]:
    """Read an indicator reference TSV: name, role, source, semantic flag."""
    indicators = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#") or line.startswith("name\t"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(f"{path}: line {lineno}: expected 4 tab-separated fields")
            name, role, source, semantic = parts
            if role not in ROLES:
                raise ParseError(f"{path}: line {lineno}: unknown role {role!r}")
            indicators.append(
                Indicator(name=name, role=role, source=source, semantic=semantic.lower() in ("1", "true", "yes"))
            )
    return indicators


def _normalize(surface: str) -> str:
    return " ".join(surface.lower().split())


def _pct(numerator: int, denominator: int) -> int:
    # nearest integer percent, halves rounded up
    if denominator == 0:
        return 0
    return math.floor(numerator / denominator * 100 + 0.5)


@dataclass(frozen=True)
class RoleSummary:
    count: int
    string_pct: int
    semantic_pct: int
    none_pct: int
    total_pct: int


@dataclass(frozen=True)
class IndicatorComparison:
    kinds: dict[str, str]  # indicator name -> string | semantic | none
    by_role: dict[str, RoleSummary]
    combined: RoleSummary


def compare_to_indicators(schema: LabelSchema, indicators: Sequence[Indicator]) -> IndicatorComparison:
    """Match external indicators against schema labels.

    String matches are case-insensitive exact surface equality after
    whitespace normalization; an indicator that also carries a semantic
    annotation is counted once, as a string match. Percentages are rounded to
    the nearest integer and reported per role plus indicator-count-weighted
    over all roles.
    """
    kinds: dict[str, str] = {}
    tallies: dict[str, dict[str, int]] = {}
    for ind in indicators:
        labels = {_normalize(l) for l in schema.labels_for(ind.role)}
        if _normalize(ind.name) in labels:
            kind = "string"
        elif ind.semantic:
            kind = "semantic"
        else:
            kind = "none"
        kinds[ind.name] = kind
        tally = tallies.setdefault(ind.role, {"string": 0, "semantic": 0, "none": 0})
        tally[kind] += 1

    def summarize(tally: dict[str, int]) -> RoleSummary:
        count = sum(tally.values())
        return RoleSummary(
            count=count,
            string_pct=_pct(tally["string"], count),
            semantic_pct=_pct(tally["semantic"], count),
            none_pct=_pct(tally["none"], count),
            total_pct=_pct(tally["string"] + tally["semantic"], count),
        )

    by_role = {role: summarize(tally) for role, tally in sorted(tallies.items())}
    combined_tally = {"string": 0, "semantic": 0, "none": 0}
    for tally in tallies.values():
        for k, v in tally.items():
            combined_tally[k] += v
    return IndicatorComparison(kinds=kinds, by_role=by_role, combined=summarize(combined_tally))


def save_comparison_tsv(
    comparison: IndicatorComparison, indicators: Sequence[Indicator], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("name\trole\tsource\tmatch_kind\n")
        for ind in indicators:
            fh.write(f"{ind.name}\t{ind.role}\t{ind.source}\t{comparison.kinds[ind.name]}\n")
        fh.write("\n")
        for role, s in comparison.by_role.items():
            fh.write(
                f"# {role}: n={s.count} string={s.string_pct}% semantic={s.semantic_pct}% "
                f"none={s.none_pct}% total={s.total_pct}%\n"
            )
        c = comparison.combined
        fh.write(
            f"# combined: n={c.count} string={c.string_pct}% semantic={c.semantic_pct}% "
            f"none={c.none_pct}% total={c.total_pct}%\n"
        )
