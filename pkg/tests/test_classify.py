"""Encoder backends, training, threshold calibration, and serialization."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revmine.classify import (
    THRESHOLD_GRID,
    ClassifierModel,
    HashedBowEncoder,
    ThresholdSet,
    TrainConfig,
    assign_labels,
    backend_from_config,
    calibrate_thresholds,
    extract_comments,
    load_model,
    make_backend,
    predict_scores,
    save_model,
    train,
    with_thresholds,
)
from revmine.dataset import LabeledSentence
from revmine.errors import ConfigError, ContractError, SchemaError
from revmine.labels import LabelSchema
from revmine.synthetic import separable_corpus
from tests.conftest import make_labeled


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


class ScoreTableEncoder:
    """Test backend: each sentence text names a row of a fixed vector table."""

    name = "score-table"
    trainable = False

    def __init__(self, table: dict[str, list[float]], dimension: int):
        self.table = table
        self.dimension = dimension

    def encode(self, sentence) -> np.ndarray:
        text = sentence if isinstance(sentence, str) else sentence.text
        return np.asarray(self.table[text], dtype=np.float64)

    def config(self) -> dict:
        return {"name": self.name}


def _model_with_scores(labels, rows, normalization="independent", role="component"):
    """Build a model whose independent scores on text ``tN`` equal rows[N]."""
    table = {f"t{i}": [_logit(p) for p in row] for i, row in enumerate(rows)}
    backend = ScoreTableEncoder(table, dimension=len(labels))
    return ClassifierModel(
        role=role,
        backend=backend,
        normalization=normalization,
        label_order=tuple(labels),
        weights=np.eye(len(labels), dtype=np.float64),
        bias=np.zeros(len(labels), dtype=np.float64),
        thresholds=ThresholdSet(thresholds={}),
    )


# --- backends -----------------------------------------------------------------


def test_hashed_bow_is_unit_norm_and_deterministic():
    enc = HashedBowEncoder(dimension=64)
    v1 = enc.encode("タイヤ が パンク した")
    v2 = enc.encode("タイヤ が パンク した")
    assert np.array_equal(v1, v2)
    assert np.linalg.norm(v1) == pytest.approx(1.0)
    assert enc.encode("").sum() == 0.0


def test_hashed_bow_prefers_tokens_over_text():
    enc = HashedBowEncoder(dimension=64)
    s = make_labeled("s1", {"C"}, {"A"}, words=[("タイヤ", "noun"), ("が", "particle")])
    assert np.array_equal(enc.encode(s), enc.encode("タイヤ が"))


def test_hashed_bow_dimension_validation():
    with pytest.raises(ConfigError, match="dimension"):
        HashedBowEncoder(dimension=1)


def test_make_backend_dispatch():
    backend = make_backend("hashed-bow", dimension=32)
    assert backend.dimension == 32
    assert backend_from_config(backend.config()).dimension == 32
    with pytest.raises(ConfigError, match="unknown backend"):
        make_backend("gpt")


# --- threshold sets -------------------------------------------------------------


def test_threshold_set_range_check_and_default():
    t = ThresholdSet(thresholds={"A": 0.3})
    assert t.of("A") == 0.3
    assert t.of("B") == 0.5
    with pytest.raises(ContractError, match="in \\(0,1\\)"):
        ThresholdSet(thresholds={"A": 1.0})


def test_threshold_grid_shape():
    assert THRESHOLD_GRID[0] == 0.05
    assert THRESHOLD_GRID[-1] == 0.95
    assert len(THRESHOLD_GRID) == 19
    steps = {round(b - a, 2) for a, b in zip(THRESHOLD_GRID, THRESHOLD_GRID[1:])}
    assert steps == {0.05}


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig(normalization="softmax")


# --- training -------------------------------------------------------------------


SCHEMA = LabelSchema("b", ("C1", "C2"), ("A1", "A2"))


def _toy_dataset():
    return [
        make_labeled(f"s{i}", {"C1"}, {"A1"}, words=[("left", "noun"), ("one", "noun")])
        for i in range(4)
    ] + [
        make_labeled(f"t{i}", {"C2"}, {"A2"}, words=[("right", "noun"), ("two", "noun")])
        for i in range(4)
    ]


def test_train_validates_inputs():
    backend = HashedBowEncoder(dimension=16)
    with pytest.raises(ContractError, match="empty"):
        train([], "component", SCHEMA, backend)
    with pytest.raises(ContractError, match="role"):
        train(_toy_dataset(), "sentiment", SCHEMA, backend)
    bad = [LabeledSentence("x", "x", frozenset({"C1"}), frozenset())]
    with pytest.raises(ContractError, match="no aspect label"):
        train(bad, "aspect", SCHEMA, backend)


def test_train_learns_separable_data_and_logs_loss():
    config = TrainConfig(epochs=20, batch_size=4, learning_rate=0.1, seed=0)
    model = train(_toy_dataset(), "component", SCHEMA, HashedBowEncoder(dimension=32), config)
    assert model.role == "component"
    assert model.label_order == ("C1", "C2")
    assert len(model.training_log) == 20
    losses = [e["loss"] for e in model.training_log]
    assert losses[-1] < losses[0]
    assert model.missing_labels == ()
    # the trained head separates the two keyword families
    scores_left = predict_scores(model, "left one")
    scores_right = predict_scores(model, "right two")
    assert scores_left[0] > scores_right[0]
    assert scores_right[1] > scores_left[1]


def test_train_records_missing_labels(caplog):
    dataset = [make_labeled(f"s{i}", {"C1"}, {"A1"}) for i in range(3)]
    with caplog.at_level("WARNING"):
        model = train(
            dataset, "component", SCHEMA, HashedBowEncoder(dimension=8), TrainConfig(epochs=1)
        )
    assert model.missing_labels == ("C2",)
    assert "C2" in caplog.text


def test_train_is_seed_reproducible():
    config = TrainConfig(epochs=3, seed=9)
    a = train(_toy_dataset(), "aspect", SCHEMA, HashedBowEncoder(dimension=16), config)
    b = train(_toy_dataset(), "aspect", SCHEMA, HashedBowEncoder(dimension=16), config)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.bias, b.bias)


# --- scoring and assignment ------------------------------------------------------


def test_predict_scores_independent_matches_table():
    model = _model_with_scores(["A", "B"], [[0.9, 0.2]])
    scores = predict_scores(model, "t0")
    assert scores == pytest.approx([0.9, 0.2])


def test_predict_scores_simplex_sums_to_one():
    model = _model_with_scores(["A", "B", "C"], [[0.9, 0.2, 0.5]], normalization="simplex")
    scores = predict_scores(model, "t0")
    assert scores.sum() == pytest.approx(1.0)
    assert (scores > 0).all()


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(min_value=-30, max_value=30), min_size=2, max_size=6),
    st.sampled_from(["independent", "simplex"]),
)
def test_scores_always_in_unit_interval(logits, normalization):
    labels = [f"L{i}" for i in range(len(logits))]
    backend = ScoreTableEncoder({"t": logits}, dimension=len(logits))
    model = ClassifierModel(
        role="component",
        backend=backend,
        normalization=normalization,
        label_order=tuple(labels),
        weights=np.eye(len(logits)),
        bias=np.zeros(len(logits)),
        thresholds=ThresholdSet(thresholds={}),
    )
    scores = predict_scores(model, "t")
    assert ((scores >= 0) & (scores <= 1)).all()
    if normalization == "simplex":
        assert scores.sum() == pytest.approx(1.0)


def test_assign_labels_boundary_is_inclusive():
    # scores exactly at the default 0.5 threshold are assigned
    model = _model_with_scores(["A", "B"], [[0.5, 0.4999]])
    assert assign_labels(model, "t0") == {"A"}


def test_assign_labels_empty_and_argmax_fallback():
    model = _model_with_scores(["A", "B"], [[0.3, 0.4]])
    assert assign_labels(model, "t0") == set()
    assert assign_labels(model, "t0", fallback="argmax") == {"B"}


def test_assign_labels_respects_per_label_thresholds():
    model = _model_with_scores(["A", "B"], [[0.3, 0.4]])
    model = with_thresholds(model, ThresholdSet(thresholds={"A": 0.25, "B": 0.45}))
    assert assign_labels(model, "t0") == {"A"}


def test_model_shape_check():
    with pytest.raises(ContractError, match="head shape"):
        ClassifierModel(
            role="component",
            backend=HashedBowEncoder(dimension=8),
            normalization="independent",
            label_order=("A",),
            weights=np.zeros((2, 8)),
            bias=np.zeros(2),
            thresholds=ThresholdSet(thresholds={}),
        )


# --- calibration -----------------------------------------------------------------


def test_calibration_tie_goes_to_lowest_threshold():
    # positive scores 0.88, negative 0.12: grid points 0.15..0.85 tie at F1=1
    # and the strict-improvement rule keeps the first (lowest) winner
    model = _model_with_scores(["A"], [[0.88], [0.12]])
    validation = [
        LabeledSentence("v0", "t0", frozenset({"A"}), frozenset({"x"})),
        LabeledSentence("v1", "t1", frozenset(), frozenset({"x"})),
    ]
    thresholds = calibrate_thresholds(model, validation)
    assert thresholds.thresholds["A"] == 0.15
    assert thresholds.macro_f1 == 1.0
    assert thresholds.degenerate == ()
    assert thresholds.missing == ()


def test_calibration_picks_separating_threshold():
    # positives score 0.78, negatives 0.42: thresholds in (0.42, 0.78] all
    # separate perfectly and the lowest grid point there is 0.45
    rows = [[0.78], [0.78], [0.42], [0.42]]
    model = _model_with_scores(["A"], rows)
    validation = [
        LabeledSentence("v0", "t0", frozenset({"A"}), frozenset()),
        LabeledSentence("v1", "t1", frozenset({"A"}), frozenset()),
        LabeledSentence("v2", "t2", frozenset(), frozenset()),
        LabeledSentence("v3", "t3", frozenset(), frozenset()),
    ]
    thresholds = calibrate_thresholds(model, validation)
    assert thresholds.thresholds["A"] == 0.45


def test_calibration_flags_degenerate_and_missing_labels():
    # A: constant scores; B: absent from validation truth; C: calibratable
    model = _model_with_scores(["A", "B", "C"], [[0.7, 0.6, 0.9], [0.7, 0.2, 0.1]])
    validation = [
        LabeledSentence("v0", "t0", frozenset({"A", "C"}), frozenset()),
        LabeledSentence("v1", "t1", frozenset({"A"}), frozenset()),
    ]
    thresholds = calibrate_thresholds(model, validation)
    assert thresholds.degenerate == ("A",)
    assert thresholds.missing == ("B",)
    assert thresholds.thresholds["A"] == 0.5
    assert thresholds.thresholds["B"] == 0.5
    assert thresholds.thresholds["C"] in THRESHOLD_GRID


def test_calibration_requires_validation_data():
    model = _model_with_scores(["A"], [[0.5]])
    with pytest.raises(ContractError, match="empty"):
        calibrate_thresholds(model, [])


def test_calibration_thresholds_come_from_the_grid():
    model = _model_with_scores(["A", "B"], [[0.62, 0.31], [0.35, 0.72], [0.55, 0.44]])
    validation = [
        LabeledSentence("v0", "t0", frozenset({"A"}), frozenset()),
        LabeledSentence("v1", "t1", frozenset({"B"}), frozenset()),
        LabeledSentence("v2", "t2", frozenset({"A"}), frozenset()),
    ]
    thresholds = calibrate_thresholds(model, validation)
    for label in ("A", "B"):
        assert thresholds.thresholds[label] in THRESHOLD_GRID
    assert thresholds.macro_f1 is not None


# --- threshold monotonicity -------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    scores=st.lists(
        st.floats(min_value=0.01, max_value=0.99), min_size=2, max_size=2
    ),
    lo=st.sampled_from(THRESHOLD_GRID),
    hi=st.sampled_from(THRESHOLD_GRID),
)
def test_raising_one_threshold_never_adds_its_label(scores, lo, hi):
    if lo > hi:
        lo, hi = hi, lo
    model = _model_with_scores(["A", "B"], [scores])
    low = with_thresholds(model, ThresholdSet(thresholds={"A": lo}))
    high = with_thresholds(model, ThresholdSet(thresholds={"A": hi}))
    assigned_low = assign_labels(low, "t0")
    assigned_high = assign_labels(high, "t0")
    # set containment on the tuned label; the other label is untouched
    if "A" in assigned_high:
        assert "A" in assigned_low
    assert ("B" in assigned_low) == ("B" in assigned_high)


# --- extraction -------------------------------------------------------------------


def test_extract_comments_order_and_validation():
    component_model = _model_with_scores(["Tire", "Brake"], [[0.9, 0.1], [0.1, 0.9], [0.9, 0.1]])
    aspect_rows = [[0.9], [0.9], [0.2]]
    aspect_model = _model_with_scores(["Weight"], aspect_rows, role="aspect")
    sentences = ["t0", "t1", "t2"]
    hits = extract_comments(component_model, aspect_model, sentences, ("Tire", "Weight"))
    assert hits == ["t0"]
    with pytest.raises(SchemaError, match="unknown component"):
        extract_comments(component_model, aspect_model, sentences, ("Wheel", "Weight"))
    with pytest.raises(SchemaError, match="unknown aspect"):
        extract_comments(component_model, aspect_model, sentences, ("Tire", "Price"))


def test_extract_preserves_corpus_order():
    component_model = _model_with_scores(["Tire"], [[0.9], [0.9], [0.9]])
    aspect_model = _model_with_scores(["Weight"], [[0.9], [0.9], [0.9]], role="aspect")
    hits = extract_comments(component_model, aspect_model, ["t2", "t0", "t1"], ("Tire", "Weight"))
    assert hits == ["t2", "t0", "t1"]


# --- serialization ----------------------------------------------------------------


def test_model_round_trip_is_bit_identical(tmp_path):
    dataset, schema = separable_corpus(components=2, aspects=2, total=40)
    config = TrainConfig(epochs=3, seed=1)
    model = train(dataset, "component", schema, HashedBowEncoder(dimension=64), config)
    model = with_thresholds(
        model,
        ThresholdSet(thresholds={"frame": 0.35}, macro_f1=0.5, degenerate=("tire",)),
    )
    save_model(model, tmp_path / "model")
    loaded = load_model(tmp_path / "model")
    assert loaded.label_order == model.label_order
    assert loaded.thresholds == model.thresholds
    assert loaded.training_log == model.training_log
    assert np.array_equal(loaded.weights, model.weights)
    for s in dataset[:5]:
        assert np.array_equal(predict_scores(loaded, s), predict_scores(model, s))
        assert assign_labels(loaded, s) == assign_labels(model, s)


def test_load_model_rejects_unknown_format(tmp_path):
    dataset, schema = separable_corpus(components=2, aspects=2, total=40)
    model = train(
        dataset, "component", schema, HashedBowEncoder(dimension=16), TrainConfig(epochs=1)
    )
    save_model(model, tmp_path / "model")
    manifest = tmp_path / "model" / "manifest.json"
    manifest.write_text(manifest.read_text().replace('"format_version": 1', '"format_version": 9'))
    with pytest.raises(ContractError, match="unsupported model format"):
        load_model(tmp_path / "model")
