"""Benchmarks, detectors, and quantifiers for hallucinations in
data-to-text corpora.

The package models each corpus as a set of (text, triple-set) points,
derives corrupted variants of it with seeded pipelines, and measures how
well entity- and entailment-based checks recover the corruption.
"""

from .core import (
    DataPoint,
    Dataset,
    NLILabel,
    ProvenanceRecord,
    RelationSchema,
    Triple,
    canonical_triples,
    hallucination_rate,
    linearize_triple,
    linearize_triple_set,
    normalize_surface,
)
from .corrupt import (
    DetectionSample,
    HallucinatedText,
    SeededPipelineConfig,
    augment_irrelevant,
    build_detection_set,
    build_quant_set,
    corrupt_longer_texts,
    corrupt_missing_triples,
    fuse_test_set,
)
from .detect import DetectionVerdict, detect_batch, detect_ner, detect_nli
from .errors import HalluAuditError
from .evaluate import (
    DetectionMetrics,
    SweepGrid,
    sample_balanced,
    score_detection,
    score_quantifier,
    threshold_sweep,
)
from .ingest import parse_docred_json, parse_webnlg_xml, read_canonical, write_canonical
from .quantify import QuantReport, ener, quantify_dataset

__version__ = "0.1.0"

__all__ = [
    "DataPoint",
    "Dataset",
    "DetectionMetrics",
    "DetectionSample",
    "DetectionVerdict",
    "HalluAuditError",
    "HallucinatedText",
    "NLILabel",
    "ProvenanceRecord",
    "QuantReport",
    "RelationSchema",
    "SeededPipelineConfig",
    "SweepGrid",
    "Triple",
    "augment_irrelevant",
    "build_detection_set",
    "build_quant_set",
    "canonical_triples",
    "corrupt_longer_texts",
    "corrupt_missing_triples",
    "detect_batch",
    "detect_ner",
    "detect_nli",
    "ener",
    "fuse_test_set",
    "hallucination_rate",
    "linearize_triple",
    "linearize_triple_set",
    "normalize_surface",
    "parse_docred_json",
    "parse_webnlg_xml",
    "quantify_dataset",
    "read_canonical",
    "sample_balanced",
    "score_detection",
    "score_quantifier",
    "threshold_sweep",
    "write_canonical",
]
