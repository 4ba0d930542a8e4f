"""Model-backend abstraction: four capabilities behind batched interfaces.

Detectors and quantifiers never talk to a model directly; they receive a
:class:`BackendSuite` whose members implement entity extraction, pairwise
similarity, entailment judgment, and text augmentation. Deterministic
in-process mocks live in :mod:`hallu_audit.backends.mocks`; the HTTP client
for a real inference service lives in :mod:`hallu_audit.backends.remote`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from ..core import NLILabel
from ..errors import BackendUnavailable, EmptyInput, InvariantViolation

BACKEND_URL_ENV = "HALLU_BACKEND_URL"
ROLES = ("ner", "similarity", "nli", "augment")


@dataclass(frozen=True)
class Entity:
    """A surface span extracted from a text; ``surface == text[start:end]``
    is checked wherever the source text is at hand."""

    surface: str
    start: int
    end: int

    def __post_init__(self):
        if not self.surface:
            raise InvariantViolation("entity surface is empty")
        if not (0 <= self.start < self.end):
            raise InvariantViolation(
                f"entity span [{self.start}, {self.end}) is not a valid range"
            )
        if self.end - self.start != len(self.surface):
            raise InvariantViolation(
                f"entity span length {self.end - self.start} does not match "
                f"surface {self.surface!r}"
            )


_LABEL_ORDER = (NLILabel.ENTAILMENT, NLILabel.NEUTRAL, NLILabel.CONTRADICTION)


@dataclass(frozen=True)
class NLIVerdict:
    """A three-way entailment judgment with its score distribution.

    The label is always the argmax of the scores; exact ties resolve in the
    fixed order entailment, neutral, contradiction.
    """

    label: NLILabel
    scores: Mapping[str, float]

    def __post_init__(self):
        scores = dict(self.scores)
        missing = [l.value for l in _LABEL_ORDER if l.value not in scores]
        if missing:
            raise InvariantViolation(f"verdict scores miss labels: {missing}")
        total = 0.0
        for key, value in scores.items():
            if not 0.0 <= value <= 1.0:
                raise InvariantViolation(f"score {key}={value} outside [0, 1]")
            total += value
        if abs(total - 1.0) > 1e-6:
            raise InvariantViolation(f"scores sum to {total}, expected 1")
        expected = _argmax_label(scores)
        if self.label is not expected:
            raise InvariantViolation(
                f"label {self.label.value} is not the argmax of {scores}"
            )
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_scores(cls, scores: Mapping[str, float]) -> "NLIVerdict":
        missing = [l.value for l in _LABEL_ORDER if l.value not in scores]
        if missing:
            raise InvariantViolation(f"verdict scores miss labels: {missing}")
        return cls(label=_argmax_label(scores), scores=scores)

    def to_dict(self) -> dict:
        return {"label": self.label.value, "scores": dict(sorted(self.scores.items()))}


def _argmax_label(scores: Mapping[str, float]) -> NLILabel:
    best = _LABEL_ORDER[0]
    for label in _LABEL_ORDER[1:]:
        if scores[label.value] > scores[best.value]:
            best = label
    return best


def verdict_for(label: NLILabel) -> NLIVerdict:
    """A fully confident verdict for `label` (used by the mocks)."""
    scores = {l.value: (1.0 if l is label else 0.0) for l in _LABEL_ORDER}
    return NLIVerdict(label=label, scores=scores)


class EntityExtractor(Protocol):
    def extract_entities(self, texts: Sequence[str]) -> list[list[Entity]]:
        """Per input text, its entities ordered by start offset."""
        ...


class SimilarityScorer(Protocol):
    def score_similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        """Per input pair, a similarity score in [0, 1]."""
        ...


class EntailmentJudge(Protocol):
    def judge_entailment(self, pairs: Sequence[tuple[str, str]]) -> list[NLIVerdict]:
        """Per (premise, hypothesis) pair, an entailment verdict."""
        ...


class TextAugmenter(Protocol):
    def augment_text(self, texts: Sequence[str], prompt_id: str, seed: int = 0) -> list[str]:
        """Per input text, a rewritten text per the prompt template."""
        ...


def validate_nli_pairs(pairs: Sequence[tuple[str, str]]) -> None:
    for i, (premise, hypothesis) in enumerate(pairs):
        if not premise or not hypothesis:
            raise EmptyInput(f"entailment pair {i} has an empty premise or hypothesis")


@dataclass
class BackendSuite:
    """The four capabilities a detector or quantifier may need.

    Unused roles may stay None; :meth:`require` gives a clear error when a
    caller needs a role the suite does not provide.
    """

    entity_extractor: EntityExtractor | None = None
    similarity_scorer: SimilarityScorer | None = None
    entailment_judge: EntailmentJudge | None = None
    text_augmenter: TextAugmenter | None = None

    def require(self, role: str):
        attr = {
            "ner": "entity_extractor",
            "similarity": "similarity_scorer",
            "nli": "entailment_judge",
            "augment": "text_augmenter",
        }[role]
        member = getattr(self, attr)
        if member is None:
            raise BackendUnavailable(f"backend suite provides no {role} capability")
        return member

    @classmethod
    def from_url(cls, base_url: str | None = None,
                 roles: Sequence[str] = ROLES, **client_options) -> "BackendSuite":
        """A suite backed by a remote inference service.

        Performs the health check up front and verifies the service
        advertises every requested role. `base_url` falls back to the
        HALLU_BACKEND_URL environment variable.
        """
        from .remote import RemoteBackendClient

        url = base_url or os.environ.get(BACKEND_URL_ENV, "")
        if not url:
            raise BackendUnavailable(
                f"no backend URL given and {BACKEND_URL_ENV} is not set"
            )
        client = RemoteBackendClient(url, **client_options)
        client.check_capabilities(roles)
        return cls(
            entity_extractor=client if "ner" in roles else None,
            similarity_scorer=client if "similarity" in roles else None,
            entailment_judge=client if "nli" in roles else None,
            text_augmenter=client if "augment" in roles else None,
        )
