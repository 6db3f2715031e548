"""Minimum-pair-size sweep: augment, train, and evaluate at each MPS value.

For one seed the dataset is split exactly once and the evaluation partition
reused across every MPS value, so metric deltas between MPS values isolate
the effect of augmentation. The breakdown helpers then compare pairs with
few sentences (minor) against well-covered ones (major).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

from . import classify
from .augment import (
    AugmentationConfig,
    AugmentationReport,
    SynonymLexicon,
    WordDivider,
    balance_to_mps,
)
from .dataset import LabeledSentence, PairMatrix, Split, SplitSpec, build_pair_matrix, split_dataset
from .errors import ConfigError, ContractError
from .evaluate import MetricsReport, build_report, macro_f1
from .labels import LabelSchema
from .ngram import NGramIndex, build_ngram_index

log = logging.getLogger(__name__)

ROLES = ("component", "aspect")


@dataclass(frozen=True)
class RunRecord:
    """One (seed, MPS) pipeline run."""

    seed: int
    mps: int
    reports: dict[str, MetricsReport]  # role -> metrics on the evaluation partition
    predicted: dict[str, list[set[str]]]  # role -> per-sentence predicted labels
    evaluation: tuple[LabeledSentence, ...]  # carries the true labels and pair membership
    train_matrix: PairMatrix  # pre-augmentation pair counts of the train partition
    augmentation: AugmentationReport

    def truth(self, role: str) -> list[frozenset[str]]:
        if role == "component":
            return [s.component_labels for s in self.evaluation]
        return [s.aspect_labels for s in self.evaluation]


@dataclass(frozen=True)
class SweepResult:
    mps_values: tuple[int, ...]
    seeds: tuple[int, ...]
    runs: tuple[RunRecord, ...]

    def __post_init__(self) -> None:
        if any(a >= b for a, b in zip(self.mps_values, self.mps_values[1:])):
            raise ContractError(f"mps_values must be strictly increasing: {self.mps_values}")

    def run(self, seed: int, mps: int) -> RunRecord:
        for r in self.runs:
            if r.seed == seed and r.mps == mps:
                return r
        raise ContractError(f"no run for seed={seed}, mps={mps}")

    def mean_macro_f1(self, role: str, mps: int) -> float:
        values = [r.reports[role].macro_f1 for r in self.runs if r.mps == mps]
        return sum(values) / len(values)


def _fresh_backend(backend) -> classify.EncoderBackend:
    # A factory gets called per training run; a stateless instance is reused.
    # Instances are told apart by `dimension`, which only __init__ sets.
    if hasattr(backend, "dimension"):
        return backend
    return backend()


def run_mps_sweep(
    dataset: Sequence[LabeledSentence],
    schema: LabelSchema,
    lexicon: SynonymLexicon,
    sweep_values: Sequence[int],
    seeds: Sequence[int],
    backend: classify.EncoderBackend | Callable[[], classify.EncoderBackend],
    *,
    split: SplitSpec | None = None,
    train_config: classify.TrainConfig | None = None,
    eligibility_min: int = 3,
    max_attempts_per_pair: int = 200,
    ngram_levels: tuple[int, ...] = (3, 2, 1),
    index: NGramIndex | None = None,
    divider: WordDivider | None = None,
    joiner: str = " ",
) -> SweepResult:
    """Run the full pipeline at every (seed, MPS) combination.

    Per run: split (once per seed) -> augment the train partition only ->
    train both role classifiers -> calibrate thresholds on validation ->
    evaluate on the held-out partition. The n-gram index defaults to one
    built over the whole dataset. Augmentation deficiencies are logged and
    recorded in the run's report; the sweep continues.
    """
    mps_values = tuple(sorted(set(sweep_values)))
    if not mps_values:
        raise ConfigError("sweep needs at least one MPS value")
    if 0 not in mps_values:
        raise ConfigError("sweep values must include the MPS=0 baseline")
    if not seeds:
        raise ConfigError("sweep needs at least one seed")
    if index is None:
        index = build_ngram_index(
            [tuple(t.surface for t in s.tokens) for s in dataset if s.tokens],
            n_max=max(3, *ngram_levels),
        )
    base_train = train_config or classify.TrainConfig()

    runs: list[RunRecord] = []
    for seed in seeds:
        spec = replace(split, seed=seed) if split else SplitSpec(seed=seed)
        parts: Split = split_dataset(dataset, schema, spec)
        train_matrix = build_pair_matrix(parts.train, schema)
        for mps in mps_values:
            config = AugmentationConfig(
                mps=mps,
                seed=seed,
                eligibility_min=eligibility_min,
                max_attempts_per_pair=max_attempts_per_pair,
                ngram_levels=ngram_levels,
            )
            augmented, aug_report = balance_to_mps(
                list(parts.train), train_matrix, lexicon, index, config, divider=divider, joiner=joiner
            )
            if aug_report.deficient_pairs():
                log.warning(
                    "seed=%d mps=%d: %d deficient pairs", seed, mps, len(aug_report.deficient_pairs())
                )
            reports: dict[str, MetricsReport] = {}
            predicted: dict[str, list[set[str]]] = {}
            for role in ROLES:
                role_backend = _fresh_backend(backend)
                model = classify.train(
                    augmented, role, schema, role_backend, replace(base_train, seed=seed)
                )
                thresholds = classify.calibrate_thresholds(model, list(parts.validation))
                model = classify.with_thresholds(model, thresholds)
                sets = [classify.assign_labels(model, s) for s in parts.evaluation]
                predicted[role] = sets
                truth = [
                    s.component_labels if role == "component" else s.aspect_labels
                    for s in parts.evaluation
                ]
                reports[role] = build_report(
                    sets,
                    truth,
                    schema.labels_for(role),
                    config={"mps": mps, "seed": seed, "backend": role_backend.name, "role": role},
                )
            runs.append(
                RunRecord(
                    seed=seed,
                    mps=mps,
                    reports=reports,
                    predicted=predicted,
                    evaluation=parts.evaluation,
                    train_matrix=train_matrix,
                    augmentation=aug_report,
                )
            )
    return SweepResult(mps_values=mps_values, seeds=tuple(seeds), runs=tuple(runs))


@dataclass(frozen=True)
class GroupMetrics:
    group: str  # "minor" or "major"
    role: str
    mps: int
    macro_f1: float  # mean over seeds
    delta_vs_baseline: float
    sentence_count: int  # evaluation sentences in the group (first seed)
    label_count: int


@dataclass(frozen=True)
class BreakdownReport:
    cut: int
    groups: tuple[GroupMetrics, ...]

    def get(self, group: str, role: str, mps: int) -> GroupMetrics:
        for g in self.groups:
            if (g.group, g.role, g.mps) == (group, role, mps):
                return g
        raise ContractError(f"no breakdown entry for {(group, role, mps)}")


def _group_pairs(matrix: PairMatrix, cut: int) -> dict[str, set[tuple[str, str]]]:
    minor = {p for p, n in matrix.cells() if 0 < n <= cut}
    major = {p for p, n in matrix.cells() if n > cut}
    return {"minor": minor, "major": major}


def _sentence_in_group(s: LabeledSentence, pairs: set[tuple[str, str]]) -> bool:
    return any(p in pairs for p in s.pairs())


def _group_macro(
    run: RunRecord, role: str, pairs: set[tuple[str, str]], schema: LabelSchema
) -> tuple[float, int, int]:
    """Macro-F1 restricted to the group's sentences, over labels with support there."""
    idx = [i for i, s in enumerate(run.evaluation) if _sentence_in_group(s, pairs)]
    if not idx:
        return 0.0, 0, 0
    truth = [run.truth(role)[i] for i in idx]
    preds = [run.predicted[role][i] for i in idx]
    labels = [x for x in schema.labels_for(role) if any(x in t for t in truth)]
    if not labels:
        return 0.0, len(idx), 0
    return macro_f1(preds, truth, labels), len(idx), len(labels)


def major_minor_breakdown(
    sweep: SweepResult, matrix: PairMatrix, cut: int = 10
) -> BreakdownReport:
    """Metrics aggregated separately over small (minor) and large (major) pairs.

    Pair sizes come from ``matrix`` (pre-augmentation counts); empty groups
    are reported with zero counts. Deltas compare each MPS against the
    MPS=0 baseline of the same seed, then average over seeds.
    """
    if cut < 1:
        raise ConfigError(f"cut must be >= 1, got {cut}")
    schema = matrix.schema
    groups = _group_pairs(matrix, cut)
    out: list[GroupMetrics] = []
    for group, pairs in groups.items():
        for role in ROLES:
            baseline: dict[int, float] = {}
            for seed in sweep.seeds:
                base_run = sweep.run(seed, 0)
                baseline[seed], _, _ = _group_macro(base_run, role, pairs, schema)
            for mps in sweep.mps_values:
                scores, counts, label_counts = [], 0, 0
                for seed in sweep.seeds:
                    run = sweep.run(seed, mps)
                    f1, n, k = _group_macro(run, role, pairs, schema)
                    scores.append((f1, f1 - baseline[seed]))
                    if seed == sweep.seeds[0]:
                        counts, label_counts = n, k
                mean = sum(s for s, _ in scores) / len(scores)
                delta = sum(d for _, d in scores) / len(scores)
                out.append(
                    GroupMetrics(
                        group=group,
                        role=role,
                        mps=mps,
                        macro_f1=mean,
                        delta_vs_baseline=delta,
                        sentence_count=counts,
                        label_count=label_counts,
                    )
                )
    return BreakdownReport(cut=cut, groups=tuple(out))


def augmented_pair_delta(sweep: SweepResult, schema: LabelSchema) -> dict[tuple[int, str], float]:
    """Per (MPS, role): macro-F1 gain over baseline on the pairs augmentation touched.

    The label group is fixed by the pairs processed at that MPS, and the
    baseline run of the same seed is evaluated on the same group.
    """
    out: dict[tuple[int, str], float] = {}
    for mps in sweep.mps_values:
        if mps == 0:
            continue
        for role in ROLES:
            deltas = []
            for seed in sweep.seeds:
                run = sweep.run(seed, mps)
                pairs = {
                    (r.component, r.aspect) for r in run.augmentation.pair_records
                }
                if not pairs:
                    continue
                f1, _, _ = _group_macro(run, role, pairs, schema)
                base, _, _ = _group_macro(sweep.run(seed, 0), role, pairs, schema)
                deltas.append(f1 - base)
            if deltas:
                out[(mps, role)] = sum(deltas) / len(deltas)
    return out


def save_sweep_csv(sweep: SweepResult, path: str | Path) -> None:
    """Long-form macro-F1 series: one row per (role, mps, seed)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("role,mps,seed,macro_f1\n")
        for run in sweep.runs:
            for role in ROLES:
                fh.write(f"{role},{run.mps},{run.seed},{run.reports[role].macro_f1:.6f}\n")


def save_breakdown_csv(breakdown: BreakdownReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("group,role,mps,macro_f1,delta_vs_baseline,sentences,labels\n")
        for g in breakdown.groups:
            fh.write(
                f"{g.group},{g.role},{g.mps},{g.macro_f1:.6f},{g.delta_vs_baseline:.6f},"
                f"{g.sentence_count},{g.label_count}\n"
            )


def save_sweep_json(sweep: SweepResult, path: str | Path) -> None:
    payload = {
        "mps_values": list(sweep.mps_values),
        "seeds": list(sweep.seeds),
        "runs": [
            {
                "seed": run.seed,
                "mps": run.mps,
                "macro_f1": {role: run.reports[role].macro_f1 for role in ROLES},
                "generated_total": run.augmentation.generated_total,
                "deficient_pairs": [list(p) for p in run.augmentation.deficient_pairs()],
            }
            for run in sweep.runs
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
