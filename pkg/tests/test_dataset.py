"""Labeled dataset, pair matrix, histogram, and split contract tests."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revmine.dataset import (
    LabeledSentence,
    Split,
    SplitSpec,
    build_pair_matrix,
    label_sentence,
    load_dataset,
    pair_histogram,
    save_dataset,
    save_histogram_csv,
    save_matrix_tsv,
    split_dataset,
    validate_dataset,
)
from revmine.errors import SchemaError, SplitError
from revmine.labels import LabelSchema
from revmine.synthetic import table_layout_corpus
from tests.conftest import make_labeled


def test_label_sentence_from_corpus(jp_sentence):
    s = jp_sentence("タイヤ が パンク した", sentence_id="r1#0")
    labeled = label_sentence(s, ["Tire"], ["Durability"])
    assert labeled.sentence_id == "r1#0"
    assert labeled.text == "タイヤ が パンク した"
    assert labeled.component_labels == frozenset({"Tire"})
    assert not labeled.is_augmented
    assert labeled.source_id is None
    assert len(labeled.tokens) == 4


def test_augmented_provenance():
    s = make_labeled("a1", {"Tire"}, {"Weight"}, provenance="augmented:r1#0")
    assert s.is_augmented
    assert s.source_id == "r1#0"


def test_pairs_are_sorted_cross_product():
    s = make_labeled("s1", {"Tire", "Brake"}, {"Weight", "Durability"})
    assert s.pairs() == [
        ("Brake", "Durability"),
        ("Brake", "Weight"),
        ("Tire", "Durability"),
        ("Tire", "Weight"),
    ]


def test_validate_dataset_rejections(tiny_schema):
    dupe = [make_labeled("s1", {"Tire"}, {"Weight"}), make_labeled("s1", {"Tire"}, {"Weight"})]
    with pytest.raises(SchemaError, match="duplicate sentence_id"):
        validate_dataset(dupe, tiny_schema)
    with pytest.raises(SchemaError, match="label of each role"):
        validate_dataset([make_labeled("s1", {"Tire"}, set())], tiny_schema)
    with pytest.raises(SchemaError, match="unknown labels"):
        validate_dataset([make_labeled("s1", {"Wheel"}, {"Weight"})], tiny_schema)


def test_dataset_round_trip(tmp_path):
    sentences = [
        make_labeled("s1", {"Tire"}, {"Weight"}, words=[("タイヤ", "noun"), ("が", "particle")]),
        make_labeled("s2", {"Brake"}, {"Durability"}, provenance="augmented:s1"),
    ]
    path = tmp_path / "dataset.jsonl"
    save_dataset(sentences, path)
    assert load_dataset(path) == sentences


def test_pair_matrix_counts_multilabel_sentences_in_every_cell(tiny_schema):
    sentences = [
        make_labeled("s1", {"Tire", "Brake"}, {"Weight"}),
        make_labeled("s2", {"Tire"}, {"Weight", "Durability"}),
        make_labeled("s3", {"Tire"}, {"Weight"}),
    ]
    matrix = build_pair_matrix(sentences, tiny_schema)
    assert matrix.count("Tire", "Weight") == 3
    assert matrix.count("Brake", "Weight") == 1
    assert matrix.count("Tire", "Durability") == 1
    assert matrix.count("Brake", "Durability") == 0
    # totals are distinct-sentence counts, so cells can sum above them
    assert matrix.row_totals == {"Tire": 3, "Brake": 1}
    assert matrix.col_totals == {"Weight": 3, "Durability": 1}
    assert matrix.nonzero_pairs() == [
        ("Tire", "Durability"),
        ("Tire", "Weight"),
        ("Brake", "Weight"),
    ]


def test_save_matrix_tsv(tmp_path, tiny_schema):
    matrix = build_pair_matrix([make_labeled("s1", {"Tire"}, {"Weight"})], tiny_schema)
    out = tmp_path / "matrix.tsv"
    save_matrix_tsv(matrix, out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "component\tDurability\tWeight\ttotal"
    assert lines[1] == "Tire\t0\t1\t1"
    assert lines[3].startswith("total\t0\t1")


def test_histogram_covers_all_cells_including_zeros():
    schema = LabelSchema("b", ("C",), ("a1", "a2", "a3"))
    sentences = (
        [make_labeled(f"x{i}", {"C"}, {"a1"}) for i in range(3)]
        + [make_labeled(f"y{i}", {"C"}, {"a2"}) for i in range(7)]
        + [make_labeled(f"z{i}", {"C"}, {"a3"}) for i in range(12)]
    )
    histogram = pair_histogram(build_pair_matrix(sentences, schema), bucket_width=5)
    assert histogram.buckets == ((0, 4, 1), (5, 9, 1), (10, 14, 1))
    assert histogram.small_pairs == 2  # 3 and 7 are <= cut 10

    # zero cells land in the first bucket
    schema2 = LabelSchema("b", ("C", "D"), ("a1",))
    histogram2 = pair_histogram(
        build_pair_matrix([make_labeled("s1", {"C"}, {"a1"})], schema2), bucket_width=5
    )
    assert histogram2.buckets == ((0, 4, 2),)


def test_histogram_rejects_bad_width(tiny_schema):
    matrix = build_pair_matrix([], tiny_schema)
    with pytest.raises(SchemaError, match="bucket_width"):
        pair_histogram(matrix, bucket_width=0)


def test_save_histogram_csv(tmp_path, tiny_schema):
    matrix = build_pair_matrix([make_labeled("s1", {"Tire"}, {"Weight"})], tiny_schema)
    out = tmp_path / "histogram.csv"
    save_histogram_csv(pair_histogram(matrix, bucket_width=2), out)
    assert out.read_text(encoding="utf-8").splitlines()[0] == "bucket_lo,bucket_hi,pairs"


def test_split_spec_validates_draw_size():
    with pytest.raises(SchemaError, match="must be <"):
        SplitSpec(seed=0, eval_per_pair=5, eval_pair_min=5)


def _ids(part) -> set[str]:
    return {s.sentence_id for s in part}


def test_split_contract_on_layout_corpus():
    dataset, schema = table_layout_corpus()
    spec = SplitSpec(seed=3)
    split = split_dataset(dataset, schema, spec)

    # every populated pair has 10 sentences -> 2 eval each, 50 pairs
    assert len(split.evaluation) == 100
    assert len(split.validation) == 50
    assert len(split.train) == len(dataset) - 150

    # disjoint and exhaustive
    train, val, ev = _ids(split.train), _ids(split.validation), _ids(split.evaluation)
    assert not (train & val) and not (train & ev) and not (val & ev)
    assert train | val | ev == {s.sentence_id for s in dataset}

    # exactly eval_per_pair per eligible pair
    for pair in build_pair_matrix(dataset, schema).nonzero_pairs():
        drawn = [s for s in split.evaluation if pair in s.pairs()]
        assert len(drawn) == spec.eval_per_pair

    # seed-reproducible, and a different seed moves the draw
    again = split_dataset(dataset, schema, spec)
    assert again == split
    other = split_dataset(dataset, schema, SplitSpec(seed=4))
    assert _ids(other.evaluation) != ev


def test_split_skips_small_pairs(tiny_schema):
    sentences = [make_labeled(f"s{i}", {"Tire"}, {"Weight"}) for i in range(20)]
    sentences += [make_labeled(f"t{i}", {"Brake"}, {"Weight"}) for i in range(3)]
    spec = SplitSpec(seed=0, eval_per_pair=2, eval_pair_min=5, validation_size=4)
    split = split_dataset(sentences, tiny_schema, spec)
    # the 3-sentence pair contributes nothing to evaluation
    assert all("Brake" not in s.component_labels for s in split.evaluation)
    assert len(split.evaluation) == 2


def test_split_excludes_augmented_from_val_and_eval(tiny_schema):
    human = [make_labeled(f"s{i}", {"Tire"}, {"Weight"}) for i in range(10)]
    augmented = [
        make_labeled(f"a{i}", {"Tire"}, {"Weight"}, provenance="augmented:s0") for i in range(5)
    ]
    spec = SplitSpec(seed=1, validation_size=3)
    split = split_dataset(human + augmented, tiny_schema, spec)
    assert all(not s.is_augmented for s in split.validation)
    assert all(not s.is_augmented for s in split.evaluation)
    assert {s.sentence_id for s in split.train} >= {a.sentence_id for a in augmented}


def test_split_error_names_shortfall(tiny_schema):
    sentences = [make_labeled(f"s{i}", {"Tire"}, {"Weight"}) for i in range(8)]
    with pytest.raises(SplitError, match="short by 44"):
        split_dataset(sentences, tiny_schema, SplitSpec(seed=0))


def test_multi_pair_sentence_leaves_all_pairs(tiny_schema):
    # a sentence in two pairs, drawn for one, must not be drawn again
    sentences = [make_labeled(f"s{i}", {"Tire", "Brake"}, {"Weight"}) for i in range(6)]
    spec = SplitSpec(seed=0, eval_per_pair=2, eval_pair_min=5, validation_size=1)
    split = split_dataset(sentences, tiny_schema, spec)
    ev = [s.sentence_id for s in split.evaluation]
    assert len(ev) == len(set(ev))


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**16),
    sizes=st.lists(st.integers(min_value=1, max_value=9), min_size=2, max_size=4),
)
def test_split_is_always_a_partition(seed, sizes):
    aspects = tuple(f"a{j}" for j in range(len(sizes)))
    schema = LabelSchema("b", ("C",), aspects)
    sentences = [
        make_labeled(f"s-{j}-{i}", {"C"}, {aspects[j]})
        for j, size in enumerate(sizes)
        for i in range(size)
    ]
    spec = SplitSpec(seed=seed, eval_per_pair=2, eval_pair_min=5, validation_size=1)
    split = split_dataset(sentences, schema, spec)
    train, val, ev = _ids(split.train), _ids(split.validation), _ids(split.evaluation)
    assert not (train & val) and not (train & ev) and not (val & ev)
    assert train | val | ev == {s.sentence_id for s in sentences}
    assert len(val) == 1
    assert isinstance(split, Split)
    assert all(isinstance(s, LabeledSentence) for s in split.train)
