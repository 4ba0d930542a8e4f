"""Service configuration: which model serves which role, and batch limits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

ROLES = ("ner", "similarity", "nli", "augment")

BUILTIN_MODELS = {
    "ner": "builtin:heuristic",
    "similarity": "builtin:token-overlap",
    "nli": "builtin:lexical",
    "augment": "builtin:template",
}


class SidecarConfigError(ValueError):
    """The configuration file or model identifier cannot be used."""


@dataclass(frozen=True)
class SidecarConfig:
    """Role to model-identifier mapping plus serving limits.

    Identifiers use a scheme prefix: ``builtin:*`` for the dependency-free
    fallbacks, ``spacy:<model>``, ``st:<model>``, ``hf-nli:<model>`` and
    ``hf-generate:<model>`` for real models (the ``models`` extra).
    """

    models: dict[str, str] = field(default_factory=lambda: dict(BUILTIN_MODELS))
    device: str = "cpu"
    max_batch_size: int = 64
    max_text_length: int = 4096

    def __post_init__(self):
        unknown = sorted(set(self.models) - set(ROLES))
        if unknown:
            raise SidecarConfigError(f"unknown roles in config: {unknown}")
        if not self.models:
            raise SidecarConfigError("config maps no roles to models")
        if self.max_batch_size < 1:
            raise SidecarConfigError(f"max_batch_size must be >= 1, got {self.max_batch_size}")
        if self.max_text_length < 1:
            raise SidecarConfigError(f"max_text_length must be >= 1, got {self.max_text_length}")

    @classmethod
    def from_dict(cls, data: dict) -> "SidecarConfig":
        if not isinstance(data, dict):
            raise SidecarConfigError("config must be a JSON object")
        extra = sorted(set(data) - {"models", "device", "max_batch_size", "max_text_length"})
        if extra:
            raise SidecarConfigError(f"unknown config keys: {extra}")
        return cls(
            models=dict(data.get("models", BUILTIN_MODELS)),
            device=str(data.get("device", "cpu")),
            max_batch_size=int(data.get("max_batch_size", 64)),
            max_text_length=int(data.get("max_text_length", 4096)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "SidecarConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise SidecarConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SidecarConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)
