"""Multi-label sentence classifiers for the two label roles.

Architecture: encoder backend -> sentence vector -> linear head -> per-label
scores in [0, 1] -> per-label threshold binarization. Component and aspect
classifiers are fully independent models that share only this code path.

Score normalization is selectable: ``independent`` applies an element-wise
logistic to each label (multi-label friendly, the default), ``simplex``
applies softmax across labels so scores sum to one.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .dataset import LabeledSentence
from .errors import ConfigError, ContractError, SchemaError
from .evaluate import macro_f1, per_label_metrics
from .labels import LabelSchema

log = logging.getLogger(__name__)

ROLES = ("component", "aspect")
NORMALIZATIONS = ("independent", "simplex")


def _text_of(sentence) -> str:
    if isinstance(sentence, str):
        return sentence
    if hasattr(sentence, "text"):
        return sentence.text
    return sentence.surface  # corpus Sentence


def _surfaces_of(sentence) -> tuple[str, ...]:
    if isinstance(sentence, str):
        return tuple(sentence.split())
    tokens = getattr(sentence, "tokens", ())
    if tokens:
        return tuple(t.surface for t in tokens)
    return tuple(_text_of(sentence).split())


class EncoderBackend(Protocol):
    name: str
    dimension: int
    trainable: bool

    def encode(self, sentence) -> np.ndarray:
        """Fixed-dimension vector for one sentence; deterministic in inference."""
        ...

    def config(self) -> dict: ...


class HashedBowEncoder:
    """Deterministic hashed bag-of-tokens encoder.

    Each token surface hashes to one of ``dimension`` buckets; the sentence
    vector is the L2-normalized bucket-count vector. No trained state, so it
    is reproducible across processes and fast enough for test-scale runs.
    """

    name = "hashed-bow"
    trainable = False

    def __init__(self, dimension: int = 1024):
        if dimension < 2:
            raise ConfigError(f"dimension must be >= 2, got {dimension}")
        self.dimension = dimension

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dimension

    def encode(self, sentence) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=np.float64)
        for surface in _surfaces_of(sentence):
            v[self._bucket(surface)] += 1.0
        norm = math.sqrt(float(v @ v))
        if norm > 0:
            v /= norm
        return v

    def config(self) -> dict:
        return {"name": self.name, "dimension": self.dimension}


class TransformerEncoder:
    """Pretrained transformer backend; the sentence vector is the encoder's
    classification-token output. Loaded from a local model directory.

    Optional dependency: instantiating requires the transformers package and
    torch. The whole backend (not just the head) receives gradient updates
    during training.
    """

    name = "transformer"
    trainable = True

    def __init__(self, model_path: str, max_length: int = 128):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ConfigError("transformer backend requires the transformers extra") from exc
        self.model_path = model_path
        self.max_length = max_length
        self._tokenizer = AutoTokenizer.from_pretrained(model_path)
        self._model = AutoModel.from_pretrained(model_path)
        self._model.eval()
        self.dimension = int(self._model.config.hidden_size)

    def encode(self, sentence) -> np.ndarray:
        import torch

        with torch.no_grad():
            out = self.encode_batch([_text_of(sentence)], grad=False)
        return out[0].cpu().numpy().astype(np.float64)

    def encode_batch(self, texts: Sequence[str], grad: bool):
        import torch

        enc = self._tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        if grad:
            out = self._model(**enc)
        else:
            with torch.no_grad():
                out = self._model(**enc)
        return out.last_hidden_state[:, 0, :]

    def parameters(self):
        return self._model.parameters()

    def train_mode(self, on: bool) -> None:
        self._model.train(on)

    def config(self) -> dict:
        return {"name": self.name, "model_path": self.model_path, "max_length": self.max_length}


def make_backend(name: str, **kwargs) -> EncoderBackend:
    if name == "hashed-bow":
        return HashedBowEncoder(**kwargs)
    if name == "transformer":
        return TransformerEncoder(**kwargs)
    raise ConfigError(f"unknown backend {name!r}")


def backend_from_config(cfg: dict) -> EncoderBackend:
    cfg = dict(cfg)
    return make_backend(cfg.pop("name"), **cfg)


@dataclass(frozen=True)
class ThresholdSet:
    thresholds: dict[str, float]
    macro_f1: float | None = None  # achieved on the calibration data
    degenerate: tuple[str, ...] = ()  # labels with constant validation scores
    missing: tuple[str, ...] = ()  # labels absent from the calibration truth
    default: float = 0.5

    def __post_init__(self) -> None:
        for label, t in self.thresholds.items():
            if not 0.0 < t < 1.0:
                raise ContractError(f"threshold for {label!r} must be in (0,1), got {t}")

    def of(self, label: str) -> float:
        return self.thresholds.get(label, self.default)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0
    normalization: str = "independent"

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ConfigError("epochs and batch_size must be >= 1, learning_rate > 0")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")


@dataclass
class ClassifierModel:
    role: str
    backend: EncoderBackend
    normalization: str
    label_order: tuple[str, ...]
    weights: np.ndarray  # (labels, dimension)
    bias: np.ndarray  # (labels,)
    thresholds: ThresholdSet
    training_log: list[dict] = field(default_factory=list)
    missing_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ContractError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.weights.shape != (len(self.label_order), self.backend.dimension):
            raise ContractError("head shape does not match label order and backend dimension")


def _role_labels(sentence: LabeledSentence, role: str) -> frozenset[str]:
    return sentence.component_labels if role == "component" else sentence.aspect_labels


def train(
    dataset: Sequence[LabeledSentence],
    role: str,
    schema: LabelSchema,
    backend: EncoderBackend,
    config: TrainConfig = TrainConfig(),
) -> ClassifierModel:
    """Fit the linear head (and the backend, when trainable) on one role.

    Loss is per-label binary cross-entropy in independent mode and
    cross-entropy against the normalized multi-hot target in simplex mode.
    Initialization, batching, and updates are seeded; the per-epoch mean
    loss is recorded in the training log.
    """
    import torch

    if role not in ROLES:
        raise ContractError(f"role must be one of {ROLES}, got {role!r}")
    if not dataset:
        raise ContractError("train dataset is empty")
    labels = schema.labels_for(role)
    for s in dataset:
        if not _role_labels(s, role):
            raise ContractError(f"sentence {s.sentence_id!r} has no {role} label")

    seen = set().union(*(_role_labels(s, role) for s in dataset))
    missing = tuple(x for x in labels if x not in seen)
    for x in missing:
        log.warning("label %r absent from all training sentences; its F1 will be 0", x)

    index_of = {x: i for i, x in enumerate(labels)}
    target = np.zeros((len(dataset), len(labels)), dtype=np.float32)
    for i, s in enumerate(dataset):
        for x in _role_labels(s, role):
            target[i, index_of[x]] = 1.0
    if config.normalization == "simplex":
        target = target / target.sum(axis=1, keepdims=True)

    torch.manual_seed(config.seed)
    torch.set_num_threads(1)
    head = torch.nn.Linear(backend.dimension, len(labels))
    params = list(head.parameters())
    if backend.trainable:
        backend.train_mode(True)
        params += list(backend.parameters())
        texts = [s.text for s in dataset]
        features = None
    else:
        features = torch.from_numpy(
            np.stack([backend.encode(s) for s in dataset]).astype(np.float32)
        )
    optimizer = torch.optim.Adam(params, lr=config.learning_rate)
    y = torch.from_numpy(target)
    rng = random.Random(config.seed)
    order = list(range(len(dataset)))
    training_log: list[dict] = []

    for epoch in range(1, config.epochs + 1):
        rng.shuffle(order)
        total, count = 0.0, 0
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo : lo + config.batch_size]
            if backend.trainable:
                x = backend.encode_batch([texts[i] for i in idx], grad=True)
            else:
                x = features[idx]
            logits = head(x)
            if config.normalization == "independent":
                loss = torch.nn.functional.binary_cross_entropy_with_logits(logits, y[idx])
            else:
                logp = torch.nn.functional.log_softmax(logits, dim=1)
                loss = -(y[idx] * logp).sum(dim=1).mean()
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.item()) * len(idx)
            count += len(idx)
        training_log.append({"epoch": epoch, "loss": total / count})

    if backend.trainable:
        backend.train_mode(False)
    weights = head.weight.detach().numpy().astype(np.float64)
    bias = head.bias.detach().numpy().astype(np.float64)
    return ClassifierModel(
        role=role,
        backend=backend,
        normalization=config.normalization,
        label_order=labels,
        weights=weights,
        bias=bias,
        thresholds=ThresholdSet(thresholds={}),
        training_log=training_log,
        missing_labels=missing,
    )


def predict_scores(model: ClassifierModel, sentence) -> np.ndarray:
    """Per-label scores in [0,1], ordered by the model's label order."""
    v = model.backend.encode(sentence)
    z = model.weights @ v + model.bias
    if model.normalization == "independent":
        return 1.0 / (1.0 + np.exp(-z))
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def assign_labels(model: ClassifierModel, sentence, fallback: str | None = None) -> set[str]:
    """Labels whose score meets their threshold; the boundary is inclusive.

    An all-below-threshold sentence gets the empty set unless
    ``fallback="argmax"`` forces the single best label.
    """
    scores = predict_scores(model, sentence)
    assigned = {
        x for x, s in zip(model.label_order, scores) if s >= model.thresholds.of(x)
    }
    if not assigned and fallback == "argmax":
        assigned = {model.label_order[int(np.argmax(scores))]}
    return assigned


THRESHOLD_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


def calibrate_thresholds(
    model: ClassifierModel, validation: Sequence[LabeledSentence]
) -> ThresholdSet:
    """Per-label grid search (0.05 to 0.95, step 0.05) maximizing macro-F1.

    A label's threshold only affects its own F1 term, so the per-label
    argmax is the macro-F1 argmax. Ties go to the lowest threshold. Labels
    with constant validation scores or no validation support keep the
    default threshold and are noted in the metadata.
    """
    if not validation:
        raise ContractError("validation dataset is empty")
    truth = [_role_labels(s, model.role) for s in validation]
    scores = np.stack([predict_scores(model, s) for s in validation])

    thresholds: dict[str, float] = {}
    degenerate: list[str] = []
    missing: list[str] = []
    for j, label in enumerate(model.label_order):
        column = scores[:, j]
        has_label = [label in t for t in truth]
        if not any(has_label):
            missing.append(label)
            thresholds[label] = 0.5
            continue
        if float(column.max() - column.min()) < 1e-9:
            degenerate.append(label)
            thresholds[label] = 0.5
            continue
        best_t, best_f1 = 0.5, -1.0
        for t in THRESHOLD_GRID:
            predicted = [{label} if column[i] >= t else set() for i in range(len(truth))]
            f1 = per_label_metrics(predicted, [{label} if h else set() for h in has_label], label).f1
            if f1 > best_f1:
                best_t, best_f1 = t, f1
        thresholds[label] = best_t

    trial = ThresholdSet(thresholds=thresholds)
    model_for_eval = ClassifierModel(
        role=model.role,
        backend=model.backend,
        normalization=model.normalization,
        label_order=model.label_order,
        weights=model.weights,
        bias=model.bias,
        thresholds=trial,
        training_log=model.training_log,
        missing_labels=model.missing_labels,
    )
    predicted_sets = [assign_labels(model_for_eval, s) for s in validation]
    achieved = macro_f1(predicted_sets, truth, model.label_order)
    return ThresholdSet(
        thresholds=thresholds,
        macro_f1=achieved,
        degenerate=tuple(degenerate),
        missing=tuple(missing),
    )


def with_thresholds(model: ClassifierModel, thresholds: ThresholdSet) -> ClassifierModel:
    return ClassifierModel(
        role=model.role,
        backend=model.backend,
        normalization=model.normalization,
        label_order=model.label_order,
        weights=model.weights,
        bias=model.bias,
        thresholds=thresholds,
        training_log=model.training_log,
        missing_labels=model.missing_labels,
    )


def extract_comments(
    component_model: ClassifierModel,
    aspect_model: ClassifierModel,
    sentences: Sequence,
    query: tuple[str, str],
) -> list:
    """Sentences carrying both query labels, in input (corpus) order."""
    component, aspect = query
    if component not in component_model.label_order:
        raise SchemaError(f"unknown component label {component!r}")
    if aspect not in aspect_model.label_order:
        raise SchemaError(f"unknown aspect label {aspect!r}")
    return [
        s
        for s in sentences
        if component in assign_labels(component_model, s)
        and aspect in assign_labels(aspect_model, s)
    ]


MODEL_FORMAT_VERSION = 1


def save_model(model: ClassifierModel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": MODEL_FORMAT_VERSION,
        "role": model.role,
        "backend": model.backend.config(),
        "normalization": model.normalization,
        "label_order": list(model.label_order),
        "thresholds": {
            "per_label": model.thresholds.thresholds,
            "macro_f1": model.thresholds.macro_f1,
            "degenerate": list(model.thresholds.degenerate),
            "missing": list(model.thresholds.missing),
            "default": model.thresholds.default,
        },
        "missing_labels": list(model.missing_labels),
    }
    with open(directory / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    np.savez(directory / "head.npz", weights=model.weights, bias=model.bias)
    with open(directory / "training_log.json", "w", encoding="utf-8") as fh:
        json.dump(model.training_log, fh, indent=2)
        fh.write("\n")


def load_model(directory: str | Path) -> ClassifierModel:
    directory = Path(directory)
    with open(directory / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != MODEL_FORMAT_VERSION:
        raise ContractError(f"unsupported model format: {manifest.get('format_version')}")
    head = np.load(directory / "head.npz")
    with open(directory / "training_log.json", encoding="utf-8") as fh:
        training_log = json.load(fh)
    t = manifest["thresholds"]
    return ClassifierModel(
        role=manifest["role"],
        backend=backend_from_config(manifest["backend"]),
        normalization=manifest["normalization"],
        label_order=tuple(manifest["label_order"]),
        weights=head["weights"],
        bias=head["bias"],
        thresholds=ThresholdSet(
            thresholds=dict(t["per_label"]),
            macro_f1=t["macro_f1"],
            degenerate=tuple(t["degenerate"]),
            missing=tuple(t["missing"]),
            default=t["default"],
        ),
        training_log=training_log,
        missing_labels=tuple(manifest["missing_labels"]),
    )
