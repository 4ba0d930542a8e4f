"""Domain model: triples, data points, datasets, linearization, rate.

A data point pairs a natural-language text with its annotated triple set.
The text may express more triples than the annotation; the surplus is what
the rest of the package detects and quantifies.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    EmptySchema,
    EmptyTripleSet,
    InvariantViolation,
    NegativeExcess,
    ZeroAnnotation,
)

_FIELDS = ("head", "relation", "tail")


def normalize_surface(value: str) -> str:
    """Underscore-normalize an entity or relation string.

    Underscores become spaces, runs of whitespace collapse to one space,
    and the result is trimmed.
    """
    return " ".join(value.replace("_", " ").split())


@dataclass(frozen=True, order=True)
class Triple:
    """One (head, relation, tail) fact. Fields are trimmed at construction;
    equality is exact and case-sensitive on the trimmed fields."""

    head: str
    relation: str
    tail: str

    def __post_init__(self):
        for name in _FIELDS:
            value = getattr(self, name)
            if not isinstance(value, str):
                raise InvariantViolation(f"triple {name} must be a string, got {type(value).__name__}")
            trimmed = value.strip()
            if not trimmed:
                raise InvariantViolation(f"triple {name} is empty after trimming")
            object.__setattr__(self, name, trimmed)

    def normalized(self) -> "Triple":
        """The same fact with every field underscore-normalized."""
        return Triple(
            normalize_surface(self.head),
            normalize_surface(self.relation),
            normalize_surface(self.tail),
        )

    def to_dict(self) -> dict:
        return {"head": self.head, "relation": self.relation, "tail": self.tail}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Triple":
        try:
            return cls(data["head"], data["relation"], data["tail"])
        except KeyError as exc:
            raise InvariantViolation(f"triple record misses field {exc.args[0]!r}") from exc


def canonical_triples(triples: Iterable[Triple]) -> tuple[Triple, ...]:
    """Deduplicated triples in canonical order: sorted by (head, relation, tail)."""
    return tuple(sorted(set(triples)))


def linearize_triple(triple: Triple) -> str:
    """Render a triple as 'head relation tail' with underscores spaced out.

    Every underscore in every field becomes a space and whitespace runs
    collapse to a single space, so the output never contains an underscore
    or two consecutive spaces.
    """
    joined = " ".join(getattr(triple, name).replace("_", " ") for name in _FIELDS)
    return " ".join(joined.split())


def linearize_triple_set(triples: Iterable[Triple]) -> str:
    """Join linearized triples with ' and ', in the order given."""
    parts = [linearize_triple(t) for t in triples]
    if not parts:
        raise EmptyTripleSet("cannot linearize an empty triple collection")
    return " and ".join(parts)


def hallucination_rate(n_text_triples: int, n_annotation_triples: int) -> float:
    """Excess of text-expressed triples over annotated ones, as a fraction.

    A text expressing every annotated triple and nothing else scores 0.0;
    one extra triple for every two annotated ones scores 0.5.
    """
    if n_annotation_triples <= 0:
        raise ZeroAnnotation("annotation triple count must be positive")
    if n_text_triples < n_annotation_triples:
        raise NegativeExcess(
            f"text expresses {n_text_triples} triples, fewer than the "
            f"{n_annotation_triples} annotated"
        )
    return n_text_triples / n_annotation_triples - 1.0


@dataclass(frozen=True)
class DataPoint:
    """A text with its annotated triples and any triples known to be
    deleted from the annotation (missing_triples)."""

    id: str
    text: str
    triples: tuple[Triple, ...]
    missing_triples: tuple[Triple, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise InvariantViolation("data point id is empty")
        if not isinstance(self.text, str) or not self.text:
            raise InvariantViolation(f"data point {self.id!r} has empty text")
        triples = canonical_triples(self.triples)
        missing = canonical_triples(self.missing_triples)
        overlap = set(triples) & set(missing)
        if overlap:
            sample = sorted(overlap)[0]
            raise InvariantViolation(
                f"data point {self.id!r}: triple {sample.to_dict()} is both "
                "annotated and missing"
            )
        object.__setattr__(self, "triples", triples)
        object.__setattr__(self, "missing_triples", missing)


@dataclass(frozen=True)
class ProvenanceRecord:
    """One pipeline step in a dataset's history."""

    step: str
    seed: int | None = None
    source: str = ""
    details: Mapping | None = None

    def to_dict(self) -> dict:
        record = {"seed": self.seed, "source": self.source, "step": self.step}
        if self.details:
            record["details"] = dict(self.details)
        return record

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProvenanceRecord":
        return cls(
            step=str(data.get("step", "")),
            seed=data.get("seed"),
            source=str(data.get("source", "")),
            details=data.get("details"),
        )


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of data points with a name, a split, and the
    provenance of every pipeline step that produced it."""

    name: str
    split: str
    points: tuple[DataPoint, ...]
    provenance: tuple[ProvenanceRecord, ...] = ()

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise InvariantViolation(f"split must be 'train' or 'test', got {self.split!r}")
        points = tuple(self.points)
        seen: set[str] = set()
        for point in points:
            if point.id in seen:
                raise InvariantViolation(f"duplicate point id {point.id!r}")
            seen.add(point.id)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self) -> int:
        return len(self.points)

    def total_triples(self) -> int:
        return sum(len(p.triples) for p in self.points)

    def derive(self, points: Iterable[DataPoint], record: ProvenanceRecord,
               split: str | None = None) -> "Dataset":
        """A new dataset with `record` appended to the provenance."""
        return Dataset(
            name=self.name,
            split=self.split if split is None else split,
            points=tuple(points),
            provenance=self.provenance + (record,),
        )


@dataclass(frozen=True)
class RelationSchema:
    """The set of relation types considered relevant for quantification."""

    relations: tuple[str, ...]

    def __post_init__(self):
        relations = tuple(sorted({r.strip() for r in self.relations if r.strip()}))
        if not relations:
            raise EmptySchema("relation schema is empty")
        object.__setattr__(self, "relations", relations)

    def __contains__(self, relation: str) -> bool:
        return relation in set(self.relations)

    def __len__(self) -> int:
        return len(self.relations)


class NLILabel(enum.Enum):
    """Three-way entailment outcome. Definition order is the tie-break
    order when scores are equal."""

    ENTAILMENT = "entailment"
    NEUTRAL = "neutral"
    CONTRADICTION = "contradiction"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value
