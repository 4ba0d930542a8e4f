"""Corpus ingestion and canonical serialization.

Two external formats are understood: benchmark XML with triple-set entries
and lexicalizations (WebNLG-style), and document-level JSON with token
sentences, vertex sets, and index-based relation labels (DocRED-style).
Everything else in the package speaks canonical JSONL plus a manifest.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .core import (
    DataPoint,
    Dataset,
    ProvenanceRecord,
    Triple,
)
from .errors import (
    EmptyDataset,
    IndexOutOfRange,
    InvariantViolation,
    IoError,
    MalformedJson,
    MalformedXml,
    SchemaViolation,
    TripleParseError,
)

# -- WebNLG-style XML ---------------------------------------------------------

def parse_triple_string(raw: str, context: str) -> Triple:
    """Parse 'head | relation | tail'; exactly two ' | ' separators required."""
    parts = raw.split(" | ")
    if len(parts) != 3:
        raise TripleParseError(
            f"{context}: triple string {raw!r} has {len(parts) - 1} ' | ' separators, expected 2"
        )
    return Triple(*parts)


def parse_webnlg_xml(data: bytes | str, name: str = "webnlg", split: str = "train",
                     source: str = "") -> Dataset:
    """Parse benchmark XML into one data point per lexicalization.

    Point ids are '<entry-id>#<lex-index>' with a zero-based lex index;
    the entry id is the entry's `eid` attribute (positional `entry<k>` when
    absent, and a deterministic `.2`, `.3` suffix on duplicates).
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedXml(f"not well-formed XML: {exc}") from exc

    points: list[DataPoint] = []
    seen_entry_ids: Counter[str] = Counter()
    for k, entry in enumerate(root.iter("entry")):
        entry_id = entry.get("eid") or f"entry{k}"
        seen_entry_ids[entry_id] += 1
        if seen_entry_ids[entry_id] > 1:
            entry_id = f"{entry_id}.{seen_entry_ids[entry_id]}"
        triples = [
            parse_triple_string("".join(m.itertext()), f"entry {entry_id}")
            for m in entry.findall("modifiedtripleset/mtriple")
        ]
        for lex_index, lex in enumerate(entry.findall("lex")):
            text = "".join(lex.itertext()).strip()
            if not text:
                raise MalformedXml(f"entry {entry_id}: lexicalization {lex_index} is empty")
            points.append(DataPoint(f"{entry_id}#{lex_index}", text, tuple(triples)))

    record = ProvenanceRecord(step="ingest-webnlg-xml", seed=None, source=source or name)
    return Dataset(name=name, split=split, points=tuple(points), provenance=(record,))


# -- DocRED-style JSON --------------------------------------------------------

def parse_docred_json(data: bytes | str, name: str = "docred", split: str = "train",
                      source: str = "") -> Dataset:
    """Parse document-level JSON: text is all sentence tokens joined with
    spaces, entity surfaces come from each vertex's first mention."""
    try:
        documents = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"not valid JSON: {exc}") from exc
    if not isinstance(documents, list):
        raise MalformedJson(f"top level must be a list, got {type(documents).__name__}")

    points: list[DataPoint] = []
    for i, doc in enumerate(documents):
        if not isinstance(doc, dict):
            raise MalformedJson(f"document {i} is not an object")
        try:
            title = doc["title"]
            sents = doc["sents"]
            vertex_set = doc["vertexSet"]
            labels = doc["labels"]
        except KeyError as exc:
            raise MalformedJson(f"document {i} misses field {exc.args[0]!r}") from exc

        text = " ".join(" ".join(sent) for sent in sents)
        triples = set()
        for label in labels:
            try:
                h, t, r = label["h"], label["t"], label["r"]
            except (KeyError, TypeError) as exc:
                raise MalformedJson(f"document {title!r}: malformed label {label!r}") from exc
            triples.add(Triple(
                _vertex_name(vertex_set, h, title),
                str(r),
                _vertex_name(vertex_set, t, title),
            ))
        points.append(DataPoint(str(title), text, tuple(triples)))

    record = ProvenanceRecord(step="ingest-docred-json", seed=None, source=source or name)
    return Dataset(name=name, split=split, points=tuple(points), provenance=(record,))


def _vertex_name(vertex_set, index, title) -> str:
    if not isinstance(index, int) or not 0 <= index < len(vertex_set):
        raise IndexOutOfRange(
            f"document {title!r}: entity index {index!r} outside vertex set "
            f"of size {len(vertex_set)}", title=str(title),
        )
    mentions = vertex_set[index]
    if not mentions:
        raise IndexOutOfRange(
            f"document {title!r}: vertex {index} has no mentions", title=str(title)
        )
    try:
        return str(mentions[0]["name"])
    except (KeyError, TypeError) as exc:
        raise MalformedJson(f"document {title!r}: vertex {index} misses a mention name") from exc


# -- canonical JSONL ----------------------------------------------------------

def dumps_canonical(obj) -> str:
    """Canonical JSON: sorted keys, compact separators, raw unicode."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def manifest_path_for(data_path: Path) -> Path:
    return data_path.with_name(data_path.stem + ".manifest.json")


def point_to_dict(point: DataPoint) -> dict:
    return {
        "id": point.id,
        "text": point.text,
        "triples": [t.to_dict() for t in point.triples],
        "missing_triples": [t.to_dict() for t in point.missing_triples],
    }


def write_canonical(ds: Dataset, path: str | Path) -> Path:
    """Write the dataset as canonical JSONL and its manifest beside it."""
    path = Path(path)
    lines = [dumps_canonical(point_to_dict(p)) + "\n" for p in ds.points]
    manifest = {
        "name": ds.name,
        "split": ds.split,
        "provenance": [r.to_dict() for r in ds.provenance],
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(lines), encoding="utf-8", newline="\n")
        manifest_path_for(path).write_text(
            json.dumps(manifest, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8", newline="\n",
        )
    except OSError as exc:
        raise IoError(f"cannot write dataset to {path}: {exc}") from exc
    return path


def _require(record: dict, key: str, lineno: int):
    if key not in record:
        raise SchemaViolation(f"record misses {key!r}", line=lineno)
    return record[key]


def _parse_triple_list(raw, lineno: int, key: str) -> tuple[Triple, ...]:
    if not isinstance(raw, list):
        raise SchemaViolation(f"{key!r} must be a list", line=lineno)
    triples = []
    for item in raw:
        if not isinstance(item, dict):
            raise SchemaViolation(f"{key!r} entries must be objects", line=lineno)
        try:
            triples.append(Triple.from_dict(item))
        except InvariantViolation as exc:
            raise SchemaViolation(f"bad triple in {key!r}: {exc}", line=lineno) from exc
    return tuple(triples)


def read_canonical(path: str | Path) -> Dataset:
    """Read canonical JSONL; the manifest restores name, split, provenance.

    Looks for `<stem>.manifest.json` first, then a plain `manifest.json`
    sibling; absent both, defaults are derived from the file name.
    """
    path = Path(path)
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read dataset from {path}: {exc}") from exc

    points = []
    for lineno, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"not valid JSON: {exc}", line=lineno) from exc
        if not isinstance(record, dict):
            raise SchemaViolation("record is not an object", line=lineno)
        point_id = _require(record, "id", lineno)
        text = _require(record, "text", lineno)
        if not isinstance(point_id, str) or not isinstance(text, str):
            raise SchemaViolation("'id' and 'text' must be strings", line=lineno)
        triples = _parse_triple_list(_require(record, "triples", lineno), lineno, "triples")
        missing = _parse_triple_list(record.get("missing_triples", []), lineno, "missing_triples")
        try:
            points.append(DataPoint(point_id, text, triples, missing))
        except InvariantViolation as exc:
            raise SchemaViolation(str(exc), line=lineno) from exc

    name, split, provenance = path.stem, "train", ()
    manifest_path = manifest_path_for(path)
    if not manifest_path.exists():
        fallback = path.with_name("manifest.json")
        manifest_path = fallback if fallback.exists() else None
    if manifest_path is not None:
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaViolation(f"manifest {manifest_path.name} unreadable: {exc}") from exc
        name = manifest.get("name", name)
        split = manifest.get("split", split)
        provenance = tuple(
            ProvenanceRecord.from_dict(r) for r in manifest.get("provenance", [])
        )

    try:
        return Dataset(name=name, split=split, points=tuple(points), provenance=provenance)
    except InvariantViolation as exc:
        raise SchemaViolation(str(exc)) from exc


# -- corpus statistics --------------------------------------------------------

_SENTENCE_END_RX = re.compile(r"[.!?](?=\s|$)")


def sentence_count(text: str) -> int:
    """Naive sentence count: split on . ! ? followed by whitespace or end
    of text, count non-empty segments."""
    return sum(1 for segment in _SENTENCE_END_RX.split(text) if segment.strip())


@dataclass(frozen=True)
class CorpusStats:
    document_count: int
    total_triples: int
    avg_triples_per_point: float
    avg_sentences_per_point: float
    relation_type_histogram: dict[str, int]
    empty_annotation_points: int

    def to_dict(self) -> dict:
        return {
            "document_count": self.document_count,
            "total_triples": self.total_triples,
            "avg_triples_per_point": self.avg_triples_per_point,
            "avg_sentences_per_point": self.avg_sentences_per_point,
            "relation_type_histogram": dict(sorted(self.relation_type_histogram.items())),
            "empty_annotation_points": self.empty_annotation_points,
        }


def corpus_stats(ds: Dataset) -> CorpusStats:
    if not ds.points:
        raise EmptyDataset(f"dataset {ds.name!r} has no points")
    histogram: Counter[str] = Counter()
    sentences = 0
    empty_annotations = 0
    for point in ds.points:
        sentences += sentence_count(point.text)
        if not point.triples:
            empty_annotations += 1
        for triple in point.triples:
            histogram[triple.relation] += 1
    total = ds.total_triples()
    count = len(ds.points)
    return CorpusStats(
        document_count=count,
        total_triples=total,
        avg_triples_per_point=total / count,
        avg_sentences_per_point=sentences / count,
        relation_type_histogram=dict(histogram),
        empty_annotation_points=empty_annotations,
    )
