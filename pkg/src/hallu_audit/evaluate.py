"""Scoring and reporting for detectors and quantifiers.

Convention used throughout: the POSITIVE class is "clean". A true positive
is a clean text accepted as clean; a false positive is a hallucinated text
wrongly accepted. Precision, recall, and F1 are 0.0 whenever their
denominator is 0.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backends import BackendSuite
from .core import Triple
from .corrupt import DetectionSample
from .detect import (
    CLEAN,
    HALLUCINATED,
    BatchVerdict,
    entity_best_scores,
)
from .errors import (
    EmptyInput,
    IdMismatch,
    InvariantViolation,
    IoError,
    NotEnoughSamples,
)
from .quantify import QuantReport
from .rng import derive_stream

POSITIVE_CLASS = CLEAN

# Published reference results for the full-model pipelines this package
# replaces with pluggable backends. Wide-tolerance replication targets for
# the inference sidecar; never asserted in CI.
REFERENCE_RESULTS = {
    "ner-full-model": {
        "precision": 85.34, "recall": 82.25, "f1": 83.76, "threshold": 0.55,
    },
    "nli-roberta-large-mnli": {"precision": 88.29, "recall": 93.45, "f1": 90.79},
    "nli-deberta-v2-xlarge-mnli": {"precision": 90.05, "recall": 94.35, "f1": 92.15},
    "nli-dusek-kasner-2020": {"precision": 77.20, "recall": 79.60, "f1": 78.40},
}


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class DetectionMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float:
        return _safe_div(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _safe_div(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return _safe_div(2 * p * r, p + r)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


def sample_balanced(samples: Sequence[DetectionSample], n: int, seed: int) -> list[DetectionSample]:
    """n samples without replacement, each trimmed to one uniformly chosen
    clean text and one uniformly chosen hallucinated text (2n instances).

    Only samples carrying both kinds of text are eligible.
    """
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n}")
    eligible = [s for s in samples if s.clean_texts and s.hallucinated_texts]
    if n > len(eligible):
        raise NotEnoughSamples(
            f"asked for {n} samples but only {len(eligible)} have both a "
            "clean and a hallucinated text"
        )
    stream = derive_stream(seed)
    chosen = stream.sample_indices(len(eligible), n)
    trimmed = []
    for index in chosen:
        sample = eligible[index]
        clean = sample.clean_texts[stream.below(len(sample.clean_texts))]
        hall = sample.hallucinated_texts[stream.below(len(sample.hallucinated_texts))]
        trimmed.append(DetectionSample(
            id=sample.id,
            triples=sample.triples,
            clean_texts=(clean,),
            hallucinated_texts=(hall,),
        ))
    return trimmed


def score_detection(verdicts: Sequence[BatchVerdict]) -> DetectionMetrics:
    """Confusion counts over verdicts whose role is the gold label."""
    if not verdicts:
        raise EmptyInput("no verdicts to score")
    tp = fp = tn = fn = 0
    for verdict in verdicts:
        if verdict.role not in (CLEAN, HALLUCINATED):
            raise InvariantViolation(
                f"verdict {verdict.item_id!r} has role {verdict.role!r}; "
                "scoring needs gold clean/hallucinated roles"
            )
        predicted_clean = verdict.verdict.label == CLEAN
        if verdict.role == CLEAN:
            if predicted_clean:
                tp += 1
            else:
                fn += 1
        else:
            if predicted_clean:
                fp += 1
            else:
                tn += 1
    return DetectionMetrics(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class SweepGrid:
    lo: float = 0.05
    hi: float = 0.95
    step: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0:
            raise ValueError(f"grid bounds [{self.lo}, {self.hi}] invalid")
        if self.step <= 0.0:
            raise ValueError(f"grid step must be positive, got {self.step}")

    def thresholds(self) -> tuple[float, ...]:
        count = int((self.hi - self.lo) / self.step + 1e-9) + 1
        return tuple(round(self.lo + i * self.step, 9) for i in range(count))


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    metrics: DetectionMetrics


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    best_threshold: float

    def row_at(self, threshold: float) -> SweepRow:
        for row in self.rows:
            if row.threshold == threshold:
                return row
        raise KeyError(threshold)


def threshold_sweep(instances: Sequence[DetectionSample], suite: BackendSuite,
                    grid: SweepGrid = SweepGrid()) -> SweepResult:
    """NER-method metrics at every grid threshold.

    Entity similarity scores are computed once per text and reused across
    thresholds, so each row equals an independent detect_ner run at that
    threshold. Best threshold is the lowest one maximizing F1.
    """
    if not instances:
        raise EmptyInput("no instances to sweep over")
    scored: list[tuple[str, list[float]]] = []
    for sample in instances:
        for role, texts in ((CLEAN, sample.clean_texts),
                            (HALLUCINATED, [h.text for h in sample.hallucinated_texts])):
            for text in texts:
                best = [s for _, s, _ in entity_best_scores(text, sample.triples, suite)]
                scored.append((role, best))

    rows = []
    for threshold in grid.thresholds():
        tp = fp = tn = fn = 0
        for role, best_scores in scored:
            predicted_clean = all(score >= threshold for score in best_scores)
            if role == CLEAN:
                if predicted_clean:
                    tp += 1
                else:
                    fn += 1
            else:
                if predicted_clean:
                    fp += 1
                else:
                    tn += 1
        rows.append(SweepRow(threshold, DetectionMetrics(tp, fp, tn, fn)))

    best = rows[0]
    for row in rows[1:]:
        if row.metrics.f1 > best.metrics.f1:
            best = row
    return SweepResult(rows=tuple(rows), best_threshold=best.threshold)


@dataclass(frozen=True)
class QuantScore:
    """Micro-averaged triple-level scores for a quantifier run."""

    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return _safe_div(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _safe_div(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return _safe_div(2 * p * r, p + r)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


def score_quantifier(report: QuantReport, gold, *,
                     suite: BackendSuite | None = None,
                     threshold: float | None = None) -> QuantScore:
    """Score found_missing against each point's gold missing_triples.

    Matching is exact after underscore normalization; passing a suite and a
    threshold switches head/tail matching to similarity >= threshold with
    exact relation match (for non-oracle extractors whose surfaces differ
    cosmetically from the annotation).
    """
    gold_points = {p.id: p for p in gold.points}
    report_ids = [p.point_id for p in report.points]
    if set(report_ids) != set(gold_points) or len(report_ids) != len(set(report_ids)):
        raise IdMismatch(
            f"report covers {len(set(report_ids))} ids, gold covers "
            f"{len(gold_points)}; they must match exactly"
        )
    tp = fp = fn = 0
    for point in report.points:
        found = {t.normalized() for t in point.found_missing}
        missing = {t.normalized() for t in gold_points[point.point_id].missing_triples}
        if suite is not None and threshold is not None:
            matched = _similarity_match(found, missing, suite, threshold)
        else:
            matched = len(found & missing)
        tp += matched
        fp += len(found) - matched
        fn += len(missing) - matched
    return QuantScore(tp=tp, fp=fp, fn=fn)


def _similarity_match(found: set[Triple], missing: set[Triple],
                      suite: BackendSuite, threshold: float) -> int:
    """Greedy one-to-one matching: relations must be equal, heads and tails
    must clear the similarity threshold."""
    scorer = suite.require("similarity")
    remaining = sorted(missing)
    matched = 0
    for candidate in sorted(found):
        for target in remaining:
            if candidate.relation != target.relation:
                continue
            scores = scorer.score_similarity([
                (candidate.head, target.head), (candidate.tail, target.tail),
            ])
            if min(scores) >= threshold:
                matched += 1
                remaining.remove(target)
                break
    return matched


# -- reporting ----------------------------------------------------------------

def _float_repr(value: float) -> str:
    return repr(float(value))


def sweep_to_csv(result: SweepResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["threshold", "precision", "recall", "f1"])
    for row in result.rows:
        writer.writerow([
            _float_repr(row.threshold),
            _float_repr(row.metrics.precision),
            _float_repr(row.metrics.recall),
            _float_repr(row.metrics.f1),
        ])
    return buffer.getvalue()


def sweep_to_dict(result: SweepResult) -> dict:
    return {
        "best_threshold": result.best_threshold,
        "rows": [
            {"threshold": row.threshold, **row.metrics.to_dict()}
            for row in result.rows
        ],
    }


def metrics_to_csv(metrics: DetectionMetrics | QuantScore) -> str:
    record = metrics.to_dict()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(record.keys())
    writer.writerow([
        _float_repr(v) if isinstance(v, float) else v for v in record.values()
    ])
    return buffer.getvalue()


def quant_report_to_csv(report: QuantReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["id", "candidates", "found_missing"])
    for point in report.points:
        writer.writerow([point.point_id, point.candidate_count, len(point.found_missing)])
    return buffer.getvalue()


def emit_report(obj, path: str | Path, fmt: str = "json") -> Path:
    """Serialize a metrics object, sweep result, or quant report to disk.

    json output is canonical (sorted keys); csv columns are fixed per type,
    with the sweep's threshold,precision,recall,f1 layout frozen for golden
    comparisons.
    """
    if fmt == "json":
        if isinstance(obj, SweepResult):
            payload = sweep_to_dict(obj)
        elif isinstance(obj, (DetectionMetrics, QuantScore, QuantReport)):
            payload = obj.to_dict()
        else:
            raise ValueError(f"cannot report a {type(obj).__name__}")
        content = json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"
    elif fmt == "csv":
        if isinstance(obj, SweepResult):
            content = sweep_to_csv(obj)
        elif isinstance(obj, (DetectionMetrics, QuantScore)):
            content = metrics_to_csv(obj)
        elif isinstance(obj, QuantReport):
            content = quant_report_to_csv(obj)
        else:
            raise ValueError(f"cannot report a {type(obj).__name__}")
    else:
        raise ValueError(f"unknown report format {fmt!r}")

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc
    return path
