"""Regenerate the frozen golden fixtures.

Run from the repository root:

    python3 tests/golden/generate.py

The outputs are reviewed and committed; tests compare against them
byte-for-byte, so regenerating is only appropriate alongside a deliberate,
reviewed protocol change.
"""

import json
import sys
from pathlib import Path

TESTS_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(TESTS_DIR))

from helpers import golden_corpus, sweep_fixture, truth_tables  # noqa: E402

from hallu_audit.backends.mocks import (  # noqa: E402
    JaccardSimilarity,
    OracleEntityExtractor,
    OracleNLI,
    TemplateAugmenter,
)
from hallu_audit.core import linearize_triple_set  # noqa: E402
from hallu_audit.evaluate import sweep_to_csv, threshold_sweep  # noqa: E402

GOLDEN_DIR = Path(__file__).resolve().parent
WIRE_DIR = GOLDEN_DIR / "wire"

_SCORE = {"type": "number", "minimum": 0.0, "maximum": 1.0}
_NLI_LABELS = ["entailment", "neutral", "contradiction"]


def _array(item_schema: dict, length: int) -> dict:
    return {
        "type": "array",
        "items": item_schema,
        "minItems": length,
        "maxItems": length,
    }


def build_wire_fixtures() -> dict[str, dict]:
    corpus = golden_corpus()
    ner_table, tc_table = truth_tables(corpus)
    ner_table[""] = []
    extractor = OracleEntityExtractor(ner_table)
    judge = OracleNLI(tc_table)
    first, second = corpus.points

    ner_texts = [first.text, second.text, ""]
    entities = extractor.extract_entities(ner_texts)
    ner_fixture = {
        "method": "POST",
        "path": "/v1/ner",
        "request": {"texts": ner_texts},
        "response": {"entities": [
            [{"text": e.surface, "start": e.start, "end": e.end} for e in per_text]
            for per_text in entities
        ]},
        "response_schema": {
            "type": "object",
            "required": ["entities"],
            "additionalProperties": False,
            "properties": {
                "entities": _array({
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["text", "start", "end"],
                        "properties": {
                            "text": {"type": "string"},
                            "start": {"type": "integer", "minimum": 0},
                            "end": {"type": "integer", "minimum": 0},
                        },
                    },
                }, len(ner_texts)),
            },
        },
    }

    sim_pairs = [["Alan Bean", "Alan Bean"], ["A. Bean", "Alan Bean"], ["x", "y"]]
    sim_scores = JaccardSimilarity().score_similarity([tuple(p) for p in sim_pairs])
    similarity_fixture = {
        "method": "POST",
        "path": "/v1/similarity",
        "request": {"pairs": sim_pairs},
        "response": {"scores": sim_scores},
        "response_schema": {
            "type": "object",
            "required": ["scores"],
            "additionalProperties": False,
            "properties": {"scores": _array(_SCORE, len(sim_pairs))},
        },
    }

    premise = linearize_triple_set(first.triples)
    nli_pairs = [
        {"premise": premise, "hypothesis": first.text},
        {"premise": premise, "hypothesis": second.text},
    ]
    verdicts = judge.judge_entailment([(p["premise"], p["hypothesis"]) for p in nli_pairs])
    nli_fixture = {
        "method": "POST",
        "path": "/v1/nli",
        "request": {"pairs": nli_pairs},
        "response": {"verdicts": [v.to_dict() for v in verdicts]},
        "response_schema": {
            "type": "object",
            "required": ["verdicts"],
            "additionalProperties": False,
            "properties": {
                "verdicts": _array({
                    "type": "object",
                    "required": ["label", "scores"],
                    "properties": {
                        "label": {"enum": _NLI_LABELS},
                        "scores": {
                            "type": "object",
                            "required": _NLI_LABELS,
                            "properties": {name: _SCORE for name in _NLI_LABELS},
                        },
                    },
                }, len(nli_pairs)),
            },
        },
    }

    augment_texts = [first.text]
    augmented = TemplateAugmenter().augment_text(augment_texts, "concise", seed=7)
    augment_fixture = {
        "method": "POST",
        "path": "/v1/augment",
        "request": {"texts": augment_texts, "prompt_id": "concise", "seed": 7},
        "response": {"texts": augmented},
        "response_schema": {
            "type": "object",
            "required": ["texts"],
            "additionalProperties": False,
            "properties": {
                "texts": _array({"type": "string", "minLength": 1}, len(augment_texts)),
            },
        },
    }

    health_fixture = {
        "method": "GET",
        "path": "/v1/health",
        "request": None,
        "response": {
            "status": "ok",
            "capabilities": ["ner", "similarity", "nli", "augment"],
        },
        "response_schema": {
            "type": "object",
            "required": ["status", "capabilities"],
            "properties": {
                "status": {"const": "ok"},
                "capabilities": {
                    "type": "array",
                    "items": {"enum": ["ner", "similarity", "nli", "augment"]},
                    "minItems": 1,
                    "uniqueItems": True,
                },
            },
        },
    }

    return {
        "health": health_fixture,
        "ner": ner_fixture,
        "similarity": similarity_fixture,
        "nli": nli_fixture,
        "augment": augment_fixture,
    }


def main() -> None:
    WIRE_DIR.mkdir(parents=True, exist_ok=True)
    for name, fixture in build_wire_fixtures().items():
        path = WIRE_DIR / f"{name}.json"
        path.write_text(
            json.dumps(fixture, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8", newline="\n",
        )
        print(f"wrote {path}")

    samples, suite = sweep_fixture(10)
    csv_path = GOLDEN_DIR / "sweep_fixture.csv"
    csv_path.write_text(
        sweep_to_csv(threshold_sweep(samples, suite)),
        encoding="utf-8", newline="\n",
    )
    print(f"wrote {csv_path}")


if __name__ == "__main__":
    main()
