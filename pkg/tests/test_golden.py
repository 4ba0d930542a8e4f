"""The frozen fixtures are the contract: these tests prove the current code
still produces them and that the remote client driven by them is
indistinguishable from the in-process mocks."""

import importlib.util
import json
from pathlib import Path

import jsonschema
import pytest

from hallu_audit.backends import BackendSuite
from hallu_audit.backends.mocks import (
    JaccardSimilarity,
    OracleEntityExtractor,
    OracleNLI,
    TemplateAugmenter,
)
from hallu_audit.evaluate import sweep_to_csv, threshold_sweep

from helpers import golden_corpus, sweep_fixture, truth_tables
from stub_server import StubBackend

GOLDEN_DIR = Path(__file__).parent / "golden"
WIRE_DIR = GOLDEN_DIR / "wire"
ENDPOINTS = ("health", "ner", "similarity", "nli", "augment")


def load(name: str) -> dict:
    return json.loads((WIRE_DIR / f"{name}.json").read_text(encoding="utf-8"))


def oracle_components():
    corpus = golden_corpus()
    ner_table, tc_table = truth_tables(corpus)
    ner_table[""] = []
    return OracleEntityExtractor(ner_table), OracleNLI(tc_table)


@pytest.mark.parametrize("name", ENDPOINTS)
def test_frozen_response_validates_against_its_schema(name):
    fixture = load(name)
    jsonschema.validate(fixture["response"], fixture["response_schema"])


def test_frozen_fixtures_match_regeneration():
    spec = importlib.util.spec_from_file_location(
        "golden_generate", GOLDEN_DIR / "generate.py"
    )
    generate = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(generate)
    rebuilt = generate.build_wire_fixtures()
    assert set(rebuilt) == set(ENDPOINTS)
    for name, fixture in rebuilt.items():
        frozen = (WIRE_DIR / f"{name}.json").read_text(encoding="utf-8")
        assert frozen == json.dumps(
            fixture, sort_keys=True, ensure_ascii=False, indent=2
        ) + "\n", f"{name} fixture drifted from the generator"


def test_sweep_csv_matches_frozen_golden():
    samples, suite = sweep_fixture(10)
    produced = sweep_to_csv(threshold_sweep(samples, suite))
    frozen = (GOLDEN_DIR / "sweep_fixture.csv").read_text(encoding="utf-8")
    assert produced == frozen


def test_ner_vector_client_equals_mock():
    fixture = load("ner")
    texts = fixture["request"]["texts"]
    extractor, _ = oracle_components()
    with StubBackend() as stub:
        stub.script(fixture["path"], 200, fixture["response"])
        remote = BackendSuite.from_url(stub.url, roles=("ner",)).require("ner")
        got = remote.extract_entities(texts)
    assert stub.log[-1] == (fixture["path"], fixture["request"])
    assert got == extractor.extract_entities(texts)


def test_similarity_vector_client_equals_mock():
    fixture = load("similarity")
    pairs = [tuple(p) for p in fixture["request"]["pairs"]]
    with StubBackend() as stub:
        stub.script(fixture["path"], 200, fixture["response"])
        remote = BackendSuite.from_url(stub.url, roles=("similarity",)).require("similarity")
        got = remote.score_similarity(pairs)
    assert stub.log[-1] == (fixture["path"], fixture["request"])
    assert got == JaccardSimilarity().score_similarity(pairs)


def test_nli_vector_client_equals_mock():
    fixture = load("nli")
    pairs = [(p["premise"], p["hypothesis"]) for p in fixture["request"]["pairs"]]
    _, judge = oracle_components()
    with StubBackend() as stub:
        stub.script(fixture["path"], 200, fixture["response"])
        remote = BackendSuite.from_url(stub.url, roles=("nli",)).require("nli")
        got = remote.judge_entailment(pairs)
    assert stub.log[-1] == (fixture["path"], fixture["request"])
    assert got == judge.judge_entailment(pairs)


def test_augment_vector_client_equals_mock():
    fixture = load("augment")
    request = fixture["request"]
    with StubBackend() as stub:
        stub.script(fixture["path"], 200, fixture["response"])
        remote = BackendSuite.from_url(stub.url, roles=("augment",)).require("augment")
        got = remote.augment_text(request["texts"], request["prompt_id"],
                                  seed=request["seed"])
    assert stub.log[-1] == (fixture["path"], fixture["request"])
    assert got == TemplateAugmenter().augment_text(
        request["texts"], request["prompt_id"], seed=request["seed"]
    )


def test_health_vector_matches_live_stub():
    fixture = load("health")
    with StubBackend() as stub:
        suite = BackendSuite.from_url(stub.url)
        assert suite.require("ner") is not None
    assert stub.log[0] == (fixture["path"], None)
