"""Pipeline config loading, validation, and factory dispatch."""

from __future__ import annotations

import json
import sqlite3

import pytest

from revmine.augment import FileLexicon, WordNetDBLexicon
from revmine.config import PipelineConfig, load_config
from revmine.corpus import WhitespaceTokenizer
from revmine.errors import ConfigError


def _write_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_defaults_without_a_file():
    config = load_config(None)
    assert config.seed == 0
    assert config.run_dir == "run"
    assert config.tokenizer == {"name": "whitespace"}


def test_load_and_seed_override(tmp_path):
    path = _write_config(tmp_path, {"seed": 7, "run_dir": "out"})
    assert load_config(path).seed == 7
    assert load_config(path, seed=3).seed == 3
    assert load_config(path).run_dir == "out"


def test_unknown_top_level_key_rejected(tmp_path):
    path = _write_config(tmp_path, {"sede": 7})
    with pytest.raises(ConfigError, match="unknown config keys.*sede"):
        load_config(path)


def test_invalid_json_names_the_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{broken", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(path)


@pytest.mark.parametrize(
    "block,payload",
    [
        ("augment", {"mp": 5}),
        ("model", {"backends": "hashed-bow"}),
        ("train", {"epoch": 3}),
        ("eval", {"cuts": 10}),
    ],
)
def test_unknown_block_keys_rejected(block, payload):
    with pytest.raises(ConfigError, match="unknown config keys"):
        PipelineConfig(**{block: payload})


def test_require_checks_presence_and_existence(tmp_path):
    config = PipelineConfig(corpus=str(tmp_path / "missing.jsonl"))
    with pytest.raises(ConfigError, match="schema"):
        config.require("schema")
    with pytest.raises(ConfigError, match="does not exist"):
        config.require("corpus")
    real = tmp_path / "reviews.jsonl"
    real.write_text("", encoding="utf-8")
    assert PipelineConfig(corpus=str(real)).require("corpus") == str(real)


def test_augmentation_config_precedence():
    config = PipelineConfig(seed=9, augment={"mps": 10, "eligibility_min": 2})
    built = config.augmentation_config()
    assert built.mps == 10
    assert built.seed == 9
    assert built.eligibility_min == 2
    assert built.max_attempts_per_pair == 200
    assert built.ngram_levels == (3, 2, 1)
    # an explicit argument (the --mps flag) beats the block
    assert config.augmentation_config(mps=4).mps == 4


def test_augmentation_config_requires_mps():
    with pytest.raises(ConfigError, match="augment.mps is not set and no --mps given"):
        PipelineConfig().augmentation_config()


def test_augment_block_seed_beats_global():
    config = PipelineConfig(seed=9, augment={"mps": 5, "seed": 2, "ngram_levels": [2, 1]})
    built = config.augmentation_config()
    assert built.seed == 2
    assert built.ngram_levels == (2, 1)


def test_train_config_pulls_normalization_from_model_block():
    config = PipelineConfig(
        seed=5,
        train={"epochs": 3, "learning_rate": 0.5},
        model={"normalization": "simplex"},
    )
    built = config.train_config()
    assert built.epochs == 3
    assert built.learning_rate == 0.5
    assert built.batch_size == 32
    assert built.seed == 5
    assert built.normalization == "simplex"
    assert PipelineConfig(train={"seed": 1}).train_config().seed == 1


def test_make_tokenizer_loads_pos_lexicon_from_path(tmp_path):
    lexicon = tmp_path / "pos.json"
    lexicon.write_text(json.dumps({"タイヤ": "noun", "が": "particle"}), encoding="utf-8")
    config = PipelineConfig(tokenizer={"name": "whitespace", "pos_lexicon": str(lexicon)})
    tokenizer = config.make_tokenizer()
    assert isinstance(tokenizer, WhitespaceTokenizer)
    tokens = tokenizer.tokenize("タイヤ が")
    assert [(t.surface, t.pos) for t in tokens] == [("タイヤ", "noun"), ("が", "particle")]


def test_make_tokenizer_rejects_unknown_name():
    config = PipelineConfig(tokenizer={"name": "juman"})
    with pytest.raises(Exception, match="juman"):
        config.make_tokenizer()


def test_make_backend_from_model_block():
    config = PipelineConfig(model={"backend": "hashed-bow", "backend_options": {"dimension": 8}})
    assert config.make_backend().dimension == 8
    assert PipelineConfig().make_backend().name == "hashed-bow"


def test_make_lexicon_dispatches_on_extension(tmp_path):
    tsv = tmp_path / "synonyms.tsv"
    tsv.write_text("速い\t早い\n", encoding="utf-8")
    assert isinstance(PipelineConfig(lexicon=str(tsv)).make_lexicon(), FileLexicon)

    db = tmp_path / "wordnet.db"
    conn = sqlite3.connect(db)
    conn.execute("CREATE TABLE word (wordid INTEGER PRIMARY KEY, lang TEXT, lemma TEXT)")
    conn.execute("CREATE TABLE sense (synset TEXT, wordid INTEGER)")
    conn.commit()
    conn.close()
    lexicon = PipelineConfig(lexicon=str(db)).make_lexicon()
    assert isinstance(lexicon, WordNetDBLexicon)
    lexicon.close()


def test_config_is_immutable():
    config = PipelineConfig()
    with pytest.raises(AttributeError):
        config.seed = 1
