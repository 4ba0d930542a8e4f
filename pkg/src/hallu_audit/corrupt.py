"""Seeded corruption pipelines and benchmark-set builders.

Every operation here is a pure function from (dataset, seed) to a new
dataset: inputs are never mutated, per-point randomness comes from streams
derived from (seed, point index), and a provenance record is appended so
reruns are auditable and byte-identical.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    DataPoint,
    Dataset,
    ProvenanceRecord,
    Triple,
    canonical_triples,
)
from .errors import (
    AugmentationRejected,
    InvalidFraction,
    InvariantViolation,
    IoError,
    NoEligibleDonor,
    NotATestSplit,
    SchemaViolation,
    TooFewPoints,
)
from .ingest import dumps_canonical, manifest_path_for
from .prompts import require_prompt_id
from .rng import SplitMix64, derive_stream

logger = logging.getLogger(__name__)

_MAX_SEED = (1 << 64) - 1


@dataclass(frozen=True)
class SeededPipelineConfig:
    """Seed and step name shared by all corruption operations."""

    seed: int
    step_name: str = ""

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed <= _MAX_SEED:
            raise InvariantViolation(f"seed must be a 64-bit unsigned int, got {self.seed!r}")


# -- deletion corruption ------------------------------------------------------

def corrupt_missing_triples(ds: Dataset, cfg: SeededPipelineConfig) -> Dataset:
    """Delete one uniformly chosen triple from every point with at least
    two, recording it in the point's missing_triples."""
    new_points = []
    for index, point in enumerate(ds.points):
        if len(point.triples) < 2:
            new_points.append(point)
            continue
        stream = derive_stream(cfg.seed, index)
        k = stream.below(len(point.triples))
        removed = point.triples[k]
        new_points.append(DataPoint(
            point.id,
            point.text,
            point.triples[:k] + point.triples[k + 1:],
            point.missing_triples + (removed,),
        ))
    record = ProvenanceRecord(
        step=cfg.step_name or "missing-triples", seed=cfg.seed, source=ds.name
    )
    return ds.derive(new_points, record)


# -- unrelated-text corruption ------------------------------------------------

_DONOR_ATTEMPTS = 64


def _pick_donor(stream: SplitMix64, host: int, triple_sets: list[set[Triple]],
                point_ids: Sequence[str]) -> int:
    """Uniform donor index among points sharing no triple with the host.

    Rejection sampling over all indices first (uniform conditioned on
    eligibility); after repeated misses the eligible set is enumerated
    explicitly so a host without any eligible donor fails loudly.
    """
    n = len(triple_sets)
    host_triples = triple_sets[host]
    for _ in range(_DONOR_ATTEMPTS):
        j = stream.below(n)
        if j != host and not (host_triples & triple_sets[j]):
            return j
    eligible = [
        j for j in range(n) if j != host and not (host_triples & triple_sets[j])
    ]
    if not eligible:
        raise NoEligibleDonor(
            f"point {point_ids[host]!r} shares a triple with every other point"
        )
    return eligible[stream.below(len(eligible))]


def corrupt_longer_texts(ds: Dataset, cfg: SeededPipelineConfig) -> Dataset:
    """Append to every text the text of an unrelated donor point (no shared
    triples). Donors are drawn with replacement across hosts; annotations
    stay untouched, so every stated surplus is a known hallucination."""
    triple_sets = [set(p.triples) for p in ds.points]
    point_ids = [p.id for p in ds.points]
    donors: dict[str, str] = {}
    new_points = []
    for index, point in enumerate(ds.points):
        stream = derive_stream(cfg.seed, index)
        donor = ds.points[_pick_donor(stream, index, triple_sets, point_ids)]
        donors[point.id] = donor.id
        new_points.append(DataPoint(
            point.id,
            f"{point.text} {donor.text}",
            point.triples,
            point.missing_triples,
        ))
    record = ProvenanceRecord(
        step=cfg.step_name or "longer-texts", seed=cfg.seed, source=ds.name,
        details={"donors": donors},
    )
    return ds.derive(new_points, record)


# -- test-set fusing -----------------------------------------------------------

def fuse_test_set(ds: Dataset, cfg: SeededPipelineConfig) -> Dataset:
    """Pair up distinct test points at random; each pair becomes one point
    with concatenated text and the union of both annotations. An odd
    leftover point is dropped and recorded in provenance."""
    if ds.split != "test":
        raise NotATestSplit(f"dataset {ds.name!r} has split {ds.split!r}, fusing needs 'test'")
    n = len(ds.points)
    if n < 2:
        raise TooFewPoints(f"fusing needs at least 2 points, dataset has {n}")

    order = list(range(n))
    derive_stream(cfg.seed).shuffle(order)
    details: dict = {}
    if n % 2:
        dropped = ds.points[order[-1]]
        details["dropped"] = dropped.id
        logger.info("fuse-test: dropping odd leftover point %r", dropped.id)

    new_points = []
    for i in range(0, n - (n % 2), 2):
        a, b = ds.points[order[i]], ds.points[order[i + 1]]
        triples = canonical_triples(a.triples + b.triples)
        missing = tuple(
            t for t in canonical_triples(a.missing_triples + b.missing_triples)
            if t not in set(triples)
        )
        new_points.append(DataPoint(
            f"{a.id}+{b.id}", f"{a.text} {b.text}", triples, missing
        ))
    record = ProvenanceRecord(
        step=cfg.step_name or "fuse-test", seed=cfg.seed, source=ds.name,
        details=details or None,
    )
    return ds.derive(new_points, record)


# -- augmentation -------------------------------------------------------------

def _token_retention(original: str, output: str) -> float:
    tokens = original.split()
    if not tokens:
        return 1.0
    available = Counter(output.split())
    retained = 0
    for token, count in Counter(tokens).items():
        retained += min(count, available.get(token, 0))
    return retained / len(tokens)


def augment_irrelevant(ds: Dataset, prompt_id: str, augmenter, seed: int = 0,
                       step_name: str = "") -> Dataset:
    """Replace every text with the augmentation backend's rewrite under the
    given prompt. Annotations are untouched; any added content is by
    construction hallucination relative to them.

    A rewrite that is empty or shorter than its input is rejected outright;
    one that keeps less than 90% of the original's tokens is accepted but
    flagged as suspect in provenance.
    """
    require_prompt_id(prompt_id)
    texts = [p.text for p in ds.points]
    outputs = augmenter.augment_text(texts, prompt_id, seed)
    if len(outputs) != len(texts):
        raise InvariantViolation(
            f"augmenter returned {len(outputs)} texts for {len(texts)} inputs"
        )
    suspects = []
    new_points = []
    for point, output in zip(ds.points, outputs):
        if not output or len(output) < len(point.text):
            raise AugmentationRejected(
                f"point {point.id!r}: augmented text is empty or shorter than the original"
            )
        if _token_retention(point.text, output) < 0.9:
            suspects.append(point.id)
        new_points.append(DataPoint(point.id, output, point.triples, point.missing_triples))
    details: dict = {"prompt_id": prompt_id}
    if suspects:
        details["suspect"] = suspects
        logger.warning("augment: %d of %d texts flagged suspect", len(suspects), len(texts))
    record = ProvenanceRecord(
        step=step_name or "augment", seed=seed, source=ds.name, details=details
    )
    return ds.derive(new_points, record)


# -- detection benchmark ------------------------------------------------------

@dataclass(frozen=True)
class HallucinatedText:
    """A text known to state more than the sample's annotation."""

    text: str
    source_id: str
    extra_triple_count: int

    def __post_init__(self):
        if not self.text:
            raise InvariantViolation("hallucinated text is empty")
        if self.extra_triple_count < 1:
            raise InvariantViolation(
                f"extra_triple_count must be >= 1, got {self.extra_triple_count}"
            )

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "source_id": self.source_id,
            "extra_triple_count": self.extra_triple_count,
        }


@dataclass(frozen=True)
class DetectionSample:
    """One annotation value with texts stating exactly it (clean) and texts
    stating a strict superset of it (hallucinated)."""

    id: str
    triples: tuple[Triple, ...]
    clean_texts: tuple[str, ...]
    hallucinated_texts: tuple[HallucinatedText, ...]

    def __post_init__(self):
        if not self.id:
            raise InvariantViolation("detection sample id is empty")
        triples = canonical_triples(self.triples)
        if not triples:
            raise InvariantViolation(f"detection sample {self.id!r} has no triples")
        if not self.clean_texts:
            raise InvariantViolation(f"detection sample {self.id!r} has no clean texts")
        object.__setattr__(self, "triples", triples)
        object.__setattr__(self, "clean_texts", tuple(self.clean_texts))
        object.__setattr__(self, "hallucinated_texts", tuple(self.hallucinated_texts))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "triples": [t.to_dict() for t in self.triples],
            "clean_texts": list(self.clean_texts),
            "hallucinated_texts": [h.to_dict() for h in self.hallucinated_texts],
        }


def build_detection_set(d0: Dataset) -> list[DetectionSample]:
    """Group points by annotation value; for every value that some other
    point strictly extends, emit a sample whose clean texts are the exact
    matches and whose hallucinated texts come from the strict supersets.

    Values nobody extends produce no sample.
    """
    groups: dict[frozenset[Triple], list[DataPoint]] = {}
    for point in d0.points:
        groups.setdefault(frozenset(point.triples), []).append(point)

    samples: list[DetectionSample] = []
    for key, group in groups.items():
        if not key:
            continue
        hallucinated = [
            HallucinatedText(q.text, q.id, len(q.triples) - len(key))
            for q in d0.points
            if key < set(q.triples)
        ]
        if not hallucinated:
            continue
        samples.append(DetectionSample(
            id=f"det-{len(samples):05d}",
            triples=tuple(key),
            clean_texts=tuple(p.text for p in group),
            hallucinated_texts=tuple(hallucinated),
        ))
    return samples


# -- quantification benchmark -------------------------------------------------

def build_quant_set(ds: Dataset, cfg: SeededPipelineConfig,
                    policy: str = "one-per-point",
                    fraction: float | None = None) -> Dataset:
    """Delete annotated triples and record them in missing_triples.

    one-per-point: one uniform deletion per point with >= 2 triples.
    fraction f: floor(f * |T|) uniform deletions per point, never leaving
    an annotation below one triple.
    """
    if policy == "one-per-point":
        return corrupt_missing_triples(
            ds, SeededPipelineConfig(cfg.seed, cfg.step_name or "quant-set")
        )
    if policy != "fraction":
        raise InvariantViolation(f"unknown deletion policy {policy!r}")
    if fraction is None or not 0.0 <= fraction < 1.0:
        raise InvalidFraction(f"deletion fraction must be in [0, 1), got {fraction!r}")

    new_points = []
    for index, point in enumerate(ds.points):
        size = len(point.triples)
        k = min(int(fraction * size), size - 1) if size else 0
        if k <= 0:
            new_points.append(point)
            continue
        stream = derive_stream(cfg.seed, index)
        chosen = set(stream.sample_indices(size, k))
        kept = tuple(t for i, t in enumerate(point.triples) if i not in chosen)
        removed = tuple(t for i, t in enumerate(point.triples) if i in chosen)
        new_points.append(DataPoint(
            point.id, point.text, kept, point.missing_triples + removed
        ))
    record = ProvenanceRecord(
        step=cfg.step_name or "quant-set", seed=cfg.seed, source=ds.name,
        details={"policy": "fraction", "fraction": fraction},
    )
    return ds.derive(new_points, record)


# -- detection-set serialization ----------------------------------------------

def write_detection_set(samples: Sequence[DetectionSample], path: str | Path,
                        name: str = "detection", split: str = "test",
                        provenance: Iterable[ProvenanceRecord] = ()) -> Path:
    path = Path(path)
    lines = [dumps_canonical(s.to_dict()) + "\n" for s in samples]
    manifest = {
        "name": name,
        "split": split,
        "provenance": [r.to_dict() for r in provenance],
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(lines), encoding="utf-8", newline="\n")
        manifest_path_for(path).write_text(
            json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8", newline="\n",
        )
    except OSError as exc:
        raise IoError(f"cannot write detection set to {path}: {exc}") from exc
    return path


def read_detection_set(path: str | Path) -> list[DetectionSample]:
    path = Path(path)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read detection set from {path}: {exc}") from exc
    samples = []
    for lineno, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"not valid JSON: {exc}", line=lineno) from exc
        if not isinstance(record, dict):
            raise SchemaViolation("record is not an object", line=lineno)
        try:
            samples.append(DetectionSample(
                id=record["id"],
                triples=tuple(Triple.from_dict(t) for t in record["triples"]),
                clean_texts=tuple(record["clean_texts"]),
                hallucinated_texts=tuple(
                    HallucinatedText(h["text"], h["source_id"], h["extra_triple_count"])
                    for h in record.get("hallucinated_texts", [])
                ),
            ))
        except (KeyError, TypeError, InvariantViolation) as exc:
            raise SchemaViolation(f"bad detection sample: {exc}", line=lineno) from exc
    return samples
