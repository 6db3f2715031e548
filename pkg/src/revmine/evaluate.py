"""Per-label precision/recall/F1 and macro-F1 over aligned label-set pairs.

All functions are pure: they compare predicted label sets against true label
sets sentence by sentence. Zero-denominator metrics are defined as 0 and
flagged rather than dropped, and the macro average always runs over the full
label set handed in, so reports stay comparable across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ContractError

SetSeq = Sequence[set[str]] | Sequence[frozenset[str]]


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int  # true occurrences of the label
    tp: int
    fp: int
    fn: int
    flags: frozenset[str] = frozenset()  # metrics whose denominator was zero


def _check_aligned(predicted: SetSeq, true: SetSeq) -> None:
    if len(predicted) != len(true):
        raise ContractError(
            f"predicted and true label sets are misaligned: {len(predicted)} vs {len(true)}"
        )


def per_label_metrics(predicted: SetSeq, true: SetSeq, label: str) -> LabelMetrics:
    """Counts a prediction as TP/FP/FN by membership of ``label`` per sentence.

    precision = TP/(TP+FP), recall = TP/(TP+FN), F1 = 2PR/(P+R); any zero
    denominator defines the metric as 0 and flags it.
    """
    _check_aligned(predicted, true)
    tp = fp = fn = 0
    for p, t in zip(predicted, true):
        hit_p, hit_t = label in p, label in t
        if hit_p and hit_t:
            tp += 1
        elif hit_p:
            fp += 1
        elif hit_t:
            fn += 1
    flags = set()
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.add("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.add("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.add("f1")
    return LabelMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        support=tp + fn,
        tp=tp,
        fp=fp,
        fn=fn,
        flags=frozenset(flags),
    )


def macro_f1(predicted: SetSeq, true: SetSeq, labels: Sequence[str]) -> float:
    """Arithmetic mean of per-label F1 over every label in ``labels``.

    Zero-support labels contribute their flagged 0, keeping the denominator
    the full label count.
    """
    if not labels:
        raise ContractError("macro_f1 needs a non-empty label set")
    _check_aligned(predicted, true)
    return sum(per_label_metrics(predicted, true, x).f1 for x in labels) / len(labels)


@dataclass(frozen=True)
class MetricsReport:
    labels: tuple[str, ...]
    per_label: dict[str, LabelMetrics]
    macro_f1: float
    config: dict = field(default_factory=dict)  # snapshot: mps, seed, backend, role


def build_report(
    predicted: SetSeq, true: SetSeq, labels: Sequence[str], config: dict | None = None
) -> MetricsReport:
    per_label = {x: per_label_metrics(predicted, true, x) for x in labels}
    if not per_label:
        raise ContractError("report needs a non-empty label set")
    return MetricsReport(
        labels=tuple(labels),
        per_label=per_label,
        macro_f1=sum(m.f1 for m in per_label.values()) / len(per_label),
        config=dict(config or {}),
    )


def save_report_tsv(report: MetricsReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("label\tprecision\trecall\tf1\tsupport\tflags\n")
        for x in report.labels:
            m = report.per_label[x]
            flags = ",".join(sorted(m.flags))
            fh.write(f"{x}\t{m.precision:.6f}\t{m.recall:.6f}\t{m.f1:.6f}\t{m.support}\t{flags}\n")
        fh.write(f"macro\t\t\t{report.macro_f1:.6f}\t\t\n")


def save_report_json(report: MetricsReport, path: str | Path) -> None:
    payload = {
        "config": report.config,
        "macro_f1": report.macro_f1,
        "per_label": {
            x: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "flags": sorted(m.flags),
            }
            for x, m in report.per_label.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
