"""Hallucination detectors: entity matching (NER) and entailment (NLI).

Both decide one question per text: does it state anything beyond its
annotated triples? "clean" means no.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .backends import BackendSuite, Entity, NLIVerdict
from .core import (
    DataPoint,
    Dataset,
    NLILabel,
    Triple,
    linearize_triple_set,
    normalize_surface,
)
from .corrupt import DetectionSample
from .errors import EmptyAnnotation, InvariantViolation, IoError, SchemaViolation

CLEAN = "clean"
HALLUCINATED = "hallucinated"


@dataclass(frozen=True)
class UnmatchedEntity:
    """An extracted entity whose best annotation-pool score fell below the
    threshold, with the pool entry it came closest to."""

    surface: str
    best_score: float
    best_match: str

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "best_score": self.best_score,
            "best_match": self.best_match,
        }


@dataclass(frozen=True)
class DetectionVerdict:
    label: str
    unmatched: tuple[UnmatchedEntity, ...] = ()
    nli: NLIVerdict | None = None

    def __post_init__(self):
        if self.label not in (CLEAN, HALLUCINATED):
            raise InvariantViolation(f"verdict label {self.label!r} unknown")

    def to_dict(self) -> dict:
        evidence: dict = {}
        if self.unmatched:
            evidence["unmatched"] = [u.to_dict() for u in self.unmatched]
        if self.nli is not None:
            evidence["nli"] = self.nli.to_dict()
        return {"label": self.label, "evidence": evidence}


def annotation_pool(triples: Sequence[Triple]) -> tuple[str, ...]:
    """All heads and tails, underscore-normalized, deduplicated, sorted."""
    pool = {normalize_surface(t.head) for t in triples}
    pool.update(normalize_surface(t.tail) for t in triples)
    return tuple(sorted(pool))


def entity_best_scores(text: str, triples: Sequence[Triple],
                       suite: BackendSuite) -> list[tuple[Entity, float, str]]:
    """Per extracted entity, its best similarity against the annotation pool
    and the pool entry achieving it (ties break to the lexicographically
    first pool entry).

    One extraction call and one similarity call, regardless of entity count.
    """
    extractor = suite.require("ner")
    entities = extractor.extract_entities([text])[0]
    if not entities:
        return []
    pool = annotation_pool(triples)
    scorer = suite.require("similarity")
    pairs = [(entity.surface, candidate) for entity in entities for candidate in pool]
    scores = scorer.score_similarity(pairs)
    if len(scores) != len(pairs):
        raise InvariantViolation(
            f"similarity scorer returned {len(scores)} scores for {len(pairs)} pairs"
        )
    results = []
    for i, entity in enumerate(entities):
        best_score, best_match = -1.0, ""
        for j, candidate in enumerate(pool):
            score = scores[i * len(pool) + j]
            if score > best_score:
                best_score, best_match = score, candidate
        results.append((entity, best_score, best_match))
    return results


def _require_annotation(point_id: str, triples: Sequence[Triple]) -> None:
    if not triples:
        raise EmptyAnnotation(f"point {point_id!r} has no annotated triples")


def detect_ner(point: DataPoint, suite: BackendSuite, threshold: float) -> DetectionVerdict:
    """Clean iff every extracted entity matches some annotation head or tail
    with similarity >= threshold. No extracted entities means clean."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    _require_annotation(point.id, point.triples)
    scored = entity_best_scores(point.text, point.triples, suite)
    unmatched = tuple(
        UnmatchedEntity(entity.surface, best_score, best_match)
        for entity, best_score, best_match in scored
        if best_score < threshold
    )
    return DetectionVerdict(
        label=CLEAN if not unmatched else HALLUCINATED,
        unmatched=unmatched,
    )


def detect_nli(point: DataPoint, suite: BackendSuite) -> DetectionVerdict:
    """Clean iff the linearized annotation (canonical triple order) entails
    the text. Neutral and contradiction both mean hallucinated."""
    _require_annotation(point.id, point.triples)
    premise = linearize_triple_set(point.triples)
    judge = suite.require("nli")
    verdict = judge.judge_entailment([(premise, point.text)])[0]
    label = CLEAN if verdict.label is NLILabel.ENTAILMENT else HALLUCINATED
    return DetectionVerdict(label=label, nli=verdict)


@dataclass(frozen=True)
class BatchVerdict:
    """One classified text: where it came from, its gold role when known
    ('clean'/'hallucinated' for detection samples, 'text' for plain
    dataset points), and the detector's verdict."""

    item_id: str
    role: str
    verdict: DetectionVerdict

    def to_dict(self) -> dict:
        record = self.verdict.to_dict()
        record["id"] = self.item_id
        record["role"] = self.role
        return record


def _batch_items(data: Dataset | Sequence[DetectionSample]) -> list[tuple[str, str, DataPoint]]:
    items: list[tuple[str, str, DataPoint]] = []
    if isinstance(data, Dataset):
        for point in data.points:
            items.append((point.id, "text", point))
        return items
    for sample in data:
        for i, text in enumerate(sample.clean_texts):
            items.append((
                f"{sample.id}:clean:{i}", CLEAN,
                DataPoint(sample.id, text, sample.triples),
            ))
        for i, hall in enumerate(sample.hallucinated_texts):
            items.append((
                f"{sample.id}:hallucinated:{i}", HALLUCINATED,
                DataPoint(sample.id, hall.text, sample.triples),
            ))
    return items


def detect_batch(data: Dataset | Sequence[DetectionSample], method: str,
                 suite: BackendSuite, threshold: float | None = None,
                 jobs: int = 1) -> list[BatchVerdict]:
    """Run one detector over a dataset or a detection set.

    Output order is deterministic: input order, clean texts before
    hallucinated ones within a sample. `jobs` > 1 parallelizes per text
    without changing the output.
    """
    if method == "ner":
        if threshold is None:
            raise ValueError("the ner method needs a threshold")
        classify: Callable[[DataPoint], DetectionVerdict] = (
            lambda point: detect_ner(point, suite, threshold)
        )
    elif method == "nli":
        classify = lambda point: detect_nli(point, suite)
    else:
        raise ValueError(f"unknown detection method {method!r}")

    items = _batch_items(data)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(classify, (point for _, _, point in items)))
    else:
        verdicts = [classify(point) for _, _, point in items]
    return [
        BatchVerdict(item_id, role, verdict)
        for (item_id, role, _), verdict in zip(items, verdicts)
    ]


def write_verdicts(verdicts: Sequence[BatchVerdict], path: str | Path) -> Path:
    from .ingest import dumps_canonical

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            "".join(dumps_canonical(v.to_dict()) + "\n" for v in verdicts),
            encoding="utf-8", newline="\n",
        )
    except OSError as exc:
        raise IoError(f"cannot write verdicts to {path}: {exc}") from exc
    return path


def read_verdicts(path: str | Path) -> list[BatchVerdict]:
    path = Path(path)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read verdicts from {path}: {exc}") from exc
    verdicts = []
    for lineno, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"not valid JSON: {exc}", line=lineno) from exc
        try:
            evidence = record.get("evidence", {})
            unmatched = tuple(
                UnmatchedEntity(u["surface"], u["best_score"], u["best_match"])
                for u in evidence.get("unmatched", [])
            )
            nli = None
            if "nli" in evidence:
                nli = NLIVerdict.from_scores(evidence["nli"]["scores"])
            verdicts.append(BatchVerdict(
                item_id=record["id"],
                role=record["role"],
                verdict=DetectionVerdict(record["label"], unmatched, nli),
            ))
        except (KeyError, TypeError, InvariantViolation) as exc:
            raise SchemaViolation(f"bad verdict record: {exc}", line=lineno) from exc
    return verdicts
