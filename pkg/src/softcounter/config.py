# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
JSON configuration file.

Every section is optional and maps onto one typed configuration::

    {
      "vocab": {"node_type_count": 4, "relation_count": 38},
      "model": {"num_layers": 2, "max_nodes": 32},
      "counter": {"pair_typing": "relation"},
      "sparsevd": {"threshold": 3.0},
      "vd_mlp": {"hidden_dim": 4},
      "train": {"lr": 0.01, "batch_size": 128},
      "synthetic": {"count": 2000, "planted_noise_rate": 0.02}
    }

Unknown sections and unknown keys are configuration errors.
"""
import dataclasses
import json
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

from .counter import CounterConfig
from .exception import InvalidConfigError
from .gsc import GSCConfig
from .models import VDMLPConfig
from .sparsevd import SparseVDConfig
from .synthetic import SyntheticTaskConfig
from .trainer import TrainConfig
from .vocabulary import TripletVocabulary

SECTIONS = ("vocab", "model", "counter", "sparsevd", "vd_mlp", "train", "synthetic")


@dataclass(frozen=True)
class RunConfig:
    vocab: TripletVocabulary = field(default_factory=TripletVocabulary)
    model: GSCConfig = field(default_factory=GSCConfig)
    counter: CounterConfig = field(default_factory=CounterConfig)
    sparsevd: SparseVDConfig = field(default_factory=SparseVDConfig)
    vd_mlp: VDMLPConfig = field(default_factory=VDMLPConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synthetic: SyntheticTaskConfig = field(default_factory=SyntheticTaskConfig)

    def to_dict(self) -> dict:
        return {
            "vocab": self.vocab.to_dict(),
            "model": self.model.to_dict(),
            "counter": self.counter.to_dict(),
            "sparsevd": self.sparsevd.to_dict(),
            "vd_mlp": self.vd_mlp.to_dict(),
            "train": self.train.to_dict(),
            "synthetic": self.synthetic.to_dict(),
        }


def _section(data: dict, name: str) -> dict:
    values = data.get(name, {})
    if not isinstance(values, dict):
        raise InvalidConfigError(name, values, "a section must be a JSON object")
    return values


def _build(cls, name: str, values: dict, excluded=(), **fixed):
    allowed = {item.name for item in dataclasses.fields(cls)} - set(excluded)
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise InvalidConfigError(
            name, unknown, f"unknown keys, expected some of {sorted(allowed)}"
        )
    try:
        return cls(**values, **fixed)
    except TypeError as error:
        raise InvalidConfigError(name, values, str(error)) from error


def config_from_dict(data: dict) -> RunConfig:
    """
    Build the typed configuration of a parsed configuration file.

    Raises
    ------
    InvalidConfigError
        For unknown sections or keys, and for invalid values.
    """
    if not isinstance(data, dict):
        raise InvalidConfigError(
            "config", type(data).__name__, "expected a JSON object"
        )
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise InvalidConfigError(
            "config", unknown, f"unknown sections, expected some of {SECTIONS}"
        )
    vocab = TripletVocabulary.from_dict(_section(data, "vocab"))
    model = _build(
        GSCConfig, "model", _section(data, "model"), excluded=("vocab",), vocab=vocab
    )
    return RunConfig(
        vocab=vocab,
        model=model,
        counter=_build(CounterConfig, "counter", _section(data, "counter")),
        sparsevd=_build(SparseVDConfig, "sparsevd", _section(data, "sparsevd")),
        vd_mlp=_build(VDMLPConfig, "vd_mlp", _section(data, "vd_mlp")),
        train=_build(TrainConfig, "train", _section(data, "train")),
        synthetic=SyntheticTaskConfig.from_dict(_section(data, "synthetic")),
    )


def load_config(path: str | Path | None = None) -> RunConfig:
    """Read a configuration file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as stream:
            data = json.load(stream)
    except json.JSONDecodeError as error:
        raise InvalidConfigError(
            "config", str(path), f"invalid JSON ({error.msg})"
        ) from error
    except OSError as error:
        raise InvalidConfigError(
            "config", str(path), error.strerror or "unreadable"
        ) from error
    return config_from_dict(data)


def with_overrides(config: RunConfig, **train_overrides) -> RunConfig:
    """Replace training settings given on the command line.

    ``None`` values keep the file value.
    """
    values = {key: value for key, value in train_overrides.items() if value is not None}
    if not values:
        return config
    train = _build(TrainConfig, "train", {**config.train.to_dict(), **values})
    return dataclasses.replace(config, train=train)
