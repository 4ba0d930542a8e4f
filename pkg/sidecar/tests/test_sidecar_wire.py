"""Protocol conformance against the frozen wire fixtures.

Each fixture carries the exact request a client sends plus a schema the
response must satisfy. The service under test runs the builtin models,
so conformance is judged against the schema, not against the fixture's
recorded response values (those were produced by a different model).
"""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from jsonschema import validate

from hallu_sidecar.app import create_app
from hallu_sidecar.config import SidecarConfig

REPO_ROOT = Path(__file__).resolve().parents[2]
WIRE_DIR = REPO_ROOT / "tests" / "golden" / "wire"
FIXTURE_NAMES = sorted(p.stem for p in WIRE_DIR.glob("*.json"))


def load_fixture(name: str) -> dict:
    return json.loads((WIRE_DIR / f"{name}.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app())


def test_fixture_set_is_complete():
    assert FIXTURE_NAMES == ["augment", "health", "ner", "nli", "similarity"]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_golden_request_yields_conforming_response(client, name):
    fixture = load_fixture(name)
    if fixture["method"] == "GET":
        resp = client.get(fixture["path"])
    else:
        resp = client.post(fixture["path"], json=fixture["request"])
    assert resp.status_code == 200, resp.text
    assert resp.headers["content-type"].startswith("application/json")
    validate(resp.json(), fixture["response_schema"])


def test_builtin_nli_agrees_with_recorded_labels(client):
    # The lexical model is deterministic on these fixed pairs, so the
    # labels (not the probabilities) are stable enough to pin.
    fixture = load_fixture("nli")
    resp = client.post(fixture["path"], json=fixture["request"])
    got = [v["label"] for v in resp.json()["verdicts"]]
    want = [v["label"] for v in fixture["response"]["verdicts"]]
    assert got == want


def test_health_capabilities_follow_config():
    cfg = SidecarConfig(models={
        "similarity": "builtin:token-overlap",
        "ner": "builtin:heuristic",
    })
    local = TestClient(create_app(cfg))
    assert local.get("/v1/health").json() == {
        "status": "ok",
        "capabilities": ["ner", "similarity"],
    }


def test_unconfigured_role_is_503():
    cfg = SidecarConfig(models={"similarity": "builtin:token-overlap"})
    local = TestClient(create_app(cfg))
    resp = local.post("/v1/ner", json={"texts": ["x"]})
    assert resp.status_code == 503
    assert "ner" in resp.json()["error"]


def test_service_is_503_until_startup_completes():
    # Without entering the client context the startup hook never runs,
    # which models a request racing ahead of model loading.
    lazy = TestClient(create_app(preload=False))
    resp = lazy.get("/v1/health")
    assert resp.status_code == 503
    assert "error" in resp.json()


def test_startup_loads_models_when_deferred():
    with TestClient(create_app(preload=False)) as started:
        resp = started.get("/v1/health")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"


@pytest.mark.parametrize("body", [
    {"wrong": 1},
    {"texts": "not a list"},
    {"texts": [1, 2]},
    {"texts": ["ok"], "bonus": True},
])
def test_malformed_ner_bodies_are_400(client, body):
    resp = client.post("/v1/ner", json=body)
    assert resp.status_code == 400
    assert set(resp.json()) == {"error"}


def test_non_json_body_is_400(client):
    resp = client.post(
        "/v1/ner", content=b"definitely not json",
        headers={"Content-Type": "application/json"},
    )
    assert resp.status_code == 400
    assert "error" in resp.json()


def test_unknown_route_and_method_errors_are_json(client):
    missing = client.get("/v1/nope")
    assert missing.status_code == 404
    assert set(missing.json()) == {"error"}
    wrong_method = client.get("/v1/ner")
    assert wrong_method.status_code == 405
    assert set(wrong_method.json()) == {"error"}


def test_similarity_pair_arity_is_enforced(client):
    resp = client.post("/v1/similarity", json={"pairs": [["a", "b", "c"]]})
    assert resp.status_code == 400
    resp = client.post("/v1/similarity", json={"pairs": [["a"]]})
    assert resp.status_code == 400


def test_nli_rejects_empty_sides(client):
    resp = client.post("/v1/nli", json={"pairs": [{"premise": "", "hypothesis": "x"}]})
    assert resp.status_code == 400
    assert "non-empty" in resp.json()["error"]
    resp = client.post("/v1/nli", json={"pairs": [{"premise": "x", "hypothesis": ""}]})
    assert resp.status_code == 400


def test_augment_unknown_prompt_is_400(client):
    resp = client.post(
        "/v1/augment", json={"texts": ["x"], "prompt_id": "bogus", "seed": 1},
    )
    assert resp.status_code == 400
    assert "bogus" in resp.json()["error"]


def test_augment_negative_seed_is_400(client):
    resp = client.post(
        "/v1/augment", json={"texts": ["x"], "prompt_id": "free", "seed": -1},
    )
    assert resp.status_code == 400


def test_batch_limit_is_enforced():
    cfg = SidecarConfig(max_batch_size=2)
    local = TestClient(create_app(cfg))
    ok = local.post("/v1/ner", json={"texts": ["a", "b"]})
    assert ok.status_code == 200
    too_big = local.post("/v1/ner", json={"texts": ["a", "b", "c"]})
    assert too_big.status_code == 400
    assert "max_batch_size" in too_big.json()["error"]


def test_empty_batches_are_allowed(client):
    assert client.post("/v1/ner", json={"texts": []}).json() == {"entities": []}
    assert client.post("/v1/similarity", json={"pairs": []}).json() == {"scores": []}
    assert client.post("/v1/nli", json={"pairs": []}).json() == {"verdicts": []}
    assert client.post(
        "/v1/augment", json={"texts": [], "prompt_id": "free", "seed": 0},
    ).json() == {"texts": []}
