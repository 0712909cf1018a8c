"""Run configuration: every tunable of a CLI run, loadable from and echoed as JSON."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .attack import AttackConfig
from .embed import EmbedConfig
from .model.toy import MaskedTrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    attack: AttackConfig = field(default_factory=AttackConfig)
    train: MaskedTrainConfig = field(default_factory=MaskedTrainConfig)
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    lang: str = "java"
    dataset: Optional[str] = None
    adversarial: Optional[str] = None
    embeddings: Optional[str] = None
    vocab_from: list = field(default_factory=list)
    vocab: str = "declared"
    adapter: Optional[str] = None
    timeout_ms: int = 30000
    max_in_flight: int = 4
    toy_length: int = 8
    jobs: int = 1
    out: str = "out"

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


_SECTIONS = {"attack": AttackConfig, "train": MaskedTrainConfig, "embed": EmbedConfig}


def _build(cls, values: Dict[str, Any], where: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


def from_dict(data: Dict[str, Any]) -> RunConfig:
    top = dict(data)
    sections = {name: _build(cls, top.pop(name, {}) or {}, name) for name, cls in _SECTIONS.items()}
    return _build(RunConfig, {**top, **sections}, "config")


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return from_dict(data)


def override(config: RunConfig, section: Optional[str], **values) -> RunConfig:
    """Copy of ``config`` with the non-None ``values`` set (inside ``section`` if given)."""
    data = config.to_json()
    target = data[section] if section else data
    for key, value in values.items():
        if value is not None:
            target[key] = value
    return from_dict(data)
