"""HTTP client for a remote inference service speaking the /v1 protocol.

Batches are split into fixed-size chunks transparently: callers always get
one result per input, in input order, no matter how many requests were
needed. Transient failures (connection errors, 5xx, 429) are retried with
exponential backoff; a request that keeps failing raises BackendUnavailable,
while a well-delivered but malformed answer raises ProtocolError.
"""

from __future__ import annotations

import time
from typing import Callable, Sequence

import requests

from ..errors import BackendUnavailable, ProtocolError
from . import (
    Entity,
    NLIVerdict,
    validate_nli_pairs,
)

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class RemoteBackendClient:
    """One client object implements all four capability protocols."""

    def __init__(self, base_url: str, *, chunk_size: int = 32, max_attempts: int = 3,
                 backoff_base: float = 0.2, timeout: float = 30.0,
                 session: requests.Session | None = None):
        if chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
        if max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
        self.base_url = base_url.rstrip("/")
        self.chunk_size = chunk_size
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._session = session or requests.Session()
        self._augment_cache: dict[tuple[str, str, int], str] = {}

    # transport

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = f"{self.base_url}{path}"
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                response = self._session.request(
                    method, url, json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = BackendUnavailable(
                    f"{path} answered {response.status_code}: {_error_text(response)}"
                )
                continue
            if response.status_code != 200:
                raise ProtocolError(
                    f"{path} answered {response.status_code}: {_error_text(response)}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise ProtocolError(f"{path} returned a non-JSON body") from exc
            if not isinstance(body, dict):
                raise ProtocolError(f"{path} returned {type(body).__name__}, expected an object")
            return body
        raise BackendUnavailable(
            f"{url} unreachable after {self.max_attempts} attempts: {last_error}"
        )

    def _post_chunked(self, path: str, items: Sequence, key: str,
                      parse: Callable[[dict, Sequence], list],
                      extra: dict | None = None) -> list:
        results: list = []
        for offset in range(0, len(items), self.chunk_size):
            chunk = list(items[offset:offset + self.chunk_size])
            payload = {key: chunk}
            if extra:
                payload.update(extra)
            body = self._request("POST", path, payload)
            parsed = parse(body, chunk)
            if len(parsed) != len(chunk):
                raise ProtocolError(
                    f"{path} returned {len(parsed)} results for a chunk of {len(chunk)}"
                )
            results.extend(parsed)
        return results

    # health

    def health(self) -> dict:
        body = self._request("GET", "/v1/health")
        if body.get("status") != "ok":
            raise BackendUnavailable(f"backend reports status {body.get('status')!r}")
        if not isinstance(body.get("capabilities"), list):
            raise ProtocolError("health response misses a capabilities list")
        return body

    def check_capabilities(self, roles: Sequence[str]) -> None:
        advertised = set(self.health()["capabilities"])
        missing = [role for role in roles if role not in advertised]
        if missing:
            raise BackendUnavailable(
                f"backend lacks required capabilities: {', '.join(missing)} "
                f"(advertised: {', '.join(sorted(advertised)) or 'none'})"
            )

    # capabilities

    def extract_entities(self, texts: Sequence[str]) -> list[list[Entity]]:
        def parse(body: dict, chunk: Sequence) -> list:
            groups = body.get("entities")
            if not isinstance(groups, list):
                raise ProtocolError("/v1/ner response misses an entities list")
            return [
                [_parse_entity(e, text) for e in group]
                for group, text in zip(groups, chunk)
            ]

        return self._post_chunked("/v1/ner", list(texts), "texts", parse)

    def score_similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        def parse(body: dict, chunk: Sequence) -> list:
            scores = body.get("scores")
            if not isinstance(scores, list):
                raise ProtocolError("/v1/similarity response misses a scores list")
            out = []
            for score in scores:
                if not isinstance(score, (int, float)) or isinstance(score, bool):
                    raise ProtocolError(f"similarity score {score!r} is not a number")
                out.append(min(1.0, max(0.0, float(score))))
            return out

        wire_pairs = [[a, b] for a, b in pairs]
        return self._post_chunked("/v1/similarity", wire_pairs, "pairs", parse)

    def judge_entailment(self, pairs: Sequence[tuple[str, str]]) -> list[NLIVerdict]:
        validate_nli_pairs(pairs)

        def parse(body: dict, chunk: Sequence) -> list:
            verdicts = body.get("verdicts")
            if not isinstance(verdicts, list):
                raise ProtocolError("/v1/nli response misses a verdicts list")
            return [_parse_verdict(v) for v in verdicts]

        wire_pairs = [{"premise": p, "hypothesis": h} for p, h in pairs]
        return self._post_chunked("/v1/nli", wire_pairs, "pairs", parse)

    def augment_text(self, texts: Sequence[str], prompt_id: str, seed: int = 0) -> list[str]:
        missing = [t for t in dict.fromkeys(texts) if (prompt_id, t, seed) not in self._augment_cache]

        def parse(body: dict, chunk: Sequence) -> list:
            out = body.get("texts")
            if not isinstance(out, list) or not all(isinstance(t, str) for t in out):
                raise ProtocolError("/v1/augment response misses a texts list")
            return out

        if missing:
            fetched = self._post_chunked(
                "/v1/augment", missing, "texts", parse,
                extra={"prompt_id": prompt_id, "seed": seed},
            )
            for text, out in zip(missing, fetched):
                self._augment_cache[(prompt_id, text, seed)] = out
        return [self._augment_cache[(prompt_id, t, seed)] for t in texts]


def _error_text(response: requests.Response) -> str:
    try:
        body = response.json()
        if isinstance(body, dict) and "error" in body:
            return str(body["error"])
    except ValueError:
        pass
    return response.text[:200]


def _parse_entity(record, text: str) -> Entity:
    if not isinstance(record, dict):
        raise ProtocolError(f"entity record {record!r} is not an object")
    try:
        surface, start, end = record["text"], record["start"], record["end"]
    except KeyError as exc:
        raise ProtocolError(f"entity record misses field {exc.args[0]!r}") from exc
    if not isinstance(surface, str) or not isinstance(start, int) or not isinstance(end, int):
        raise ProtocolError(f"entity record {record!r} has wrong field types")
    if text[start:end] != surface:
        raise ProtocolError(
            f"entity {surface!r} does not match span [{start}, {end}) of its text"
        )
    return Entity(surface, start, end)


def _parse_verdict(record) -> NLIVerdict:
    if not isinstance(record, dict) or not isinstance(record.get("scores"), dict):
        raise ProtocolError(f"verdict record {record!r} misses scores")
    scores = {}
    for key, value in record["scores"].items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolError(f"verdict score {key}={value!r} is not a number")
        scores[str(key)] = float(value)
    try:
        return NLIVerdict.from_scores(scores)
    except Exception as exc:
        raise ProtocolError(f"verdict scores {scores} are invalid: {exc}") from exc
