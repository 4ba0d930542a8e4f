"""Missing-triple quantification by exhaustive entailment (ENER).

Extracted entities are combined into every ordered pair through every
relation of the relevant schema; candidates not already annotated are kept
iff the text entails their linearization. Relations outside the schema are
invisible by construction: the quantifier is deliberately blind to
irrelevant hallucinations.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backends import BackendSuite
from .core import (
    DataPoint,
    Dataset,
    NLILabel,
    RelationSchema,
    Triple,
    linearize_triple,
)
from .errors import InvariantViolation, IoError, SchemaViolation


@dataclass(frozen=True)
class PointQuant:
    """Quantification result for one data point."""

    point_id: str
    candidate_count: int
    found_missing: tuple[Triple, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.point_id,
            "candidates": self.candidate_count,
            "found_missing": [t.to_dict() for t in self.found_missing],
        }


@dataclass(frozen=True)
class QuantReport:
    points: tuple[PointQuant, ...]
    absolute_missing: int
    relative_missing: float

    def to_dict(self) -> dict:
        return {
            "points": [p.to_dict() for p in self.points],
            "absolute_missing": self.absolute_missing,
            "relative_missing": self.relative_missing,
        }


def ener(point: DataPoint, schema: RelationSchema, suite: BackendSuite) -> PointQuant:
    """Quantify one point.

    Entities are deduplicated by surface (first occurrence order); the
    candidate count is |E| * (|E| - 1) * |R| before dropping already
    annotated triples, and only the remaining candidates are judged, so
    found triples are never annotated ones.
    """
    extractor = suite.require("ner")
    entities = extractor.extract_entities([point.text])[0]
    surfaces = list(dict.fromkeys(entity.surface for entity in entities))

    candidate_count = len(surfaces) * (len(surfaces) - 1) * len(schema) if surfaces else 0
    annotated = set(point.triples)
    to_judge: list[Triple] = []
    for head in surfaces:
        for tail in surfaces:
            if head == tail:
                continue
            for relation in schema.relations:
                candidate = Triple(head, relation, tail)
                if candidate not in annotated:
                    to_judge.append(candidate)

    found: list[Triple] = []
    if to_judge:
        judge = suite.require("nli")
        pairs = [(point.text, linearize_triple(candidate)) for candidate in to_judge]
        verdicts = judge.judge_entailment(pairs)
        if len(verdicts) != len(pairs):
            raise InvariantViolation(
                f"entailment judge returned {len(verdicts)} verdicts for {len(pairs)} pairs"
            )
        found = [
            candidate for candidate, verdict in zip(to_judge, verdicts)
            if verdict.label is NLILabel.ENTAILMENT
        ]
    return PointQuant(
        point_id=point.id,
        candidate_count=candidate_count,
        found_missing=tuple(sorted(found)),
    )


def quantify_dataset(ds: Dataset, schema: RelationSchema, suite: BackendSuite,
                     jobs: int = 1) -> QuantReport:
    """ENER over every point, with dataset-level aggregates: the absolute
    number of found triples and its ratio to all annotated triples."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(lambda p: ener(p, schema, suite), ds.points))
    else:
        points = [ener(point, schema, suite) for point in ds.points]
    absolute = sum(len(p.found_missing) for p in points)
    total_annotated = ds.total_triples()
    return QuantReport(
        points=tuple(points),
        absolute_missing=absolute,
        relative_missing=absolute / total_annotated if total_annotated else 0.0,
    )


def write_quant_report(report: QuantReport, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(report.to_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8", newline="\n",
        )
    except OSError as exc:
        raise IoError(f"cannot write quant report to {path}: {exc}") from exc
    return path


def read_quant_report(path: str | Path) -> QuantReport:
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read quant report from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"quant report is not valid JSON: {exc}") from exc
    try:
        points = tuple(
            PointQuant(
                point_id=p["id"],
                candidate_count=p["candidates"],
                found_missing=tuple(Triple.from_dict(t) for t in p["found_missing"]),
            )
            for p in record["points"]
        )
        return QuantReport(
            points=points,
            absolute_missing=record["absolute_missing"],
            relative_missing=record["relative_missing"],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaViolation(f"bad quant report: {exc}") from exc
