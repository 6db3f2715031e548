"""Pipeline configuration: one JSON document driving every subcommand.

The global seed is the default for every seeded stage; a stage block may pin
its own. Unknown keys are rejected so typos fail loudly at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .augment import AugmentationConfig, FileLexicon, SynonymLexicon, WordNetDBLexicon
from .classify import EncoderBackend, TrainConfig, make_backend
from .corpus import Tokenizer, make_tokenizer
from .errors import ConfigError

_TOP_KEYS = {
    "seed",
    "corpus",
    "schema",
    "curation",
    "lexicon",
    "patterns",
    "indicators",
    "run_dir",
    "tokenizer",
    "augment",
    "model",
    "train",
    "eval",
}
_AUGMENT_KEYS = {"mps", "seed", "eligibility_min", "max_attempts", "ngram_levels"}
_MODEL_KEYS = {"backend", "backend_options", "normalization", "threshold_default"}
_TRAIN_KEYS = {"epochs", "batch_size", "learning_rate", "seed"}
_EVAL_KEYS = {"cut", "mps", "seeds", "eval_per_pair", "eval_pair_min", "validation_size"}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    corpus: str | None = None
    schema: str | None = None
    curation: str | None = None
    lexicon: str | None = None
    patterns: str | None = None
    indicators: str | None = None
    run_dir: str = "run"
    tokenizer: dict = field(default_factory=lambda: {"name": "whitespace"})
    augment: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for block, allowed in (
            (self.augment, _AUGMENT_KEYS),
            (self.model, _MODEL_KEYS),
            (self.train, _TRAIN_KEYS),
            (self.eval, _EVAL_KEYS),
        ):
            unknown = set(block) - allowed
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def require(self, name: str) -> str:
        path = getattr(self, name)
        if not path:
            raise ConfigError(f"config is missing the {name!r} path")
        if not Path(path).exists():
            raise ConfigError(f"{name} path does not exist: {path}")
        return path

    def augmentation_config(self, mps: int | None = None) -> AugmentationConfig:
        block = self.augment
        if mps is None:
            mps = block.get("mps")
        if mps is None:
            raise ConfigError("augment.mps is not set and no --mps given")
        return AugmentationConfig(
            mps=int(mps),
            seed=int(block.get("seed", self.seed)),
            eligibility_min=int(block.get("eligibility_min", 3)),
            max_attempts_per_pair=int(block.get("max_attempts", 200)),
            ngram_levels=tuple(block.get("ngram_levels", (3, 2, 1))),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=int(self.train.get("epochs", 30)),
            batch_size=int(self.train.get("batch_size", 32)),
            learning_rate=float(self.train.get("learning_rate", 0.01)),
            seed=int(self.train.get("seed", self.seed)),
            normalization=self.model.get("normalization", "independent"),
        )

    def make_tokenizer(self) -> Tokenizer:
        options = dict(self.tokenizer)
        name = options.pop("name", "whitespace")
        if name == "whitespace" and isinstance(options.get("pos_lexicon"), str):
            with open(options["pos_lexicon"], encoding="utf-8") as fh:
                options["pos_lexicon"] = json.load(fh)
        return make_tokenizer(name, **options)

    def make_backend(self) -> EncoderBackend:
        name = self.model.get("backend", "hashed-bow")
        return make_backend(name, **self.model.get("backend_options", {}))

    def make_lexicon(self) -> SynonymLexicon:
        path = self.require("lexicon")
        if path.endswith((".db", ".sqlite", ".sqlite3")):
            return WordNetDBLexicon(path)
        return FileLexicon.from_path(path)


def load_config(path: str | Path | None, seed: int | None = None) -> PipelineConfig:
    """Load a config document; ``seed`` (the --seed flag) overrides the file."""
    raw: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if seed is not None:
        raw["seed"] = seed
    return PipelineConfig(**raw)
