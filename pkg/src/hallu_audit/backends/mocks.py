"""Deterministic in-process backends.

These make every detector and quantifier testable with zero model downloads:
oracles answer from configured ground-truth tables, heuristics work from
plain string rules, and the template augmenter fabricates an off-schema fact
deterministically from its seed.
"""

from __future__ import annotations

import json
import re
from typing import Iterable, Mapping, Sequence

from ..core import NLILabel, Triple, linearize_triple, normalize_surface
from ..errors import EmptyInput, InvariantViolation, IoError, SchemaViolation
from ..prompts import require_prompt_id
from ..rng import SplitMix64, hash64, mix64
from . import (
    BackendSuite,
    Entity,
    NLIVerdict,
    validate_nli_pairs,
    verdict_for,
)


class OracleEntityExtractor:
    """Answers from a ground-truth table mapping exact text to its entity
    surfaces. Each distinct surface yields one entity at its first
    non-overlapping occurrence in the text."""

    def __init__(self, table: Mapping[str, Sequence[str]], strict: bool = True):
        self._table = {text: list(dict.fromkeys(surfaces)) for text, surfaces in table.items()}
        self._strict = strict

    def extract_entities(self, texts: Sequence[str]) -> list[list[Entity]]:
        return [self._extract(text) for text in texts]

    def _extract(self, text: str) -> list[Entity]:
        surfaces = self._table.get(text)
        if surfaces is None:
            if self._strict:
                raise InvariantViolation(f"oracle extractor has no entry for text {text!r}")
            return []
        claimed: list[tuple[int, int]] = []
        entities: list[Entity] = []
        for surface in surfaces:
            pos = text.find(surface)
            while pos != -1 and any(pos < e and pos + len(surface) > s for s, e in claimed):
                pos = text.find(surface, pos + 1)
            if pos == -1:
                raise InvariantViolation(
                    f"oracle surface {surface!r} not found free-standing in text {text!r}"
                )
            claimed.append((pos, pos + len(surface)))
            entities.append(Entity(surface, pos, pos + len(surface)))
        entities.sort(key=lambda e: e.start)
        return entities


_MONTHS = (
    "January|February|March|April|May|June|July|August|September|October|November|December"
)
_DATE_RX = re.compile(rf"(?:{_MONTHS}) \d{{1,2}}, \d{{4}}|\d{{4}}-\d{{2}}-\d{{2}}")
_TOKEN_RX = re.compile(r"\S+")
_EDGE_PUNCT = "\"'(),.;:!?"


class HeuristicEntityExtractor:
    """Label-agnostic extraction from plain string shape: maximal runs of
    capitalized tokens, plus 'Month D, YYYY' and 'YYYY-MM-DD' dates."""

    def extract_entities(self, texts: Sequence[str]) -> list[list[Entity]]:
        return [self._extract(text) for text in texts]

    def _extract(self, text: str) -> list[Entity]:
        date_spans = [(m.start(), m.end()) for m in _DATE_RX.finditer(text)]
        entities = [Entity(text[s:e], s, e) for s, e in date_spans]

        run: list[tuple[int, int]] = []
        for match in _TOKEN_RX.finditer(text):
            token = match.group()
            overlaps_date = any(match.start() < e and match.end() > s for s, e in date_spans)
            if token[0].isupper() and not overlaps_date:
                run.append((match.start(), match.end()))
                continue
            self._close_run(run, text, entities)
            run = []
        self._close_run(run, text, entities)
        entities.sort(key=lambda e: e.start)
        return entities

    @staticmethod
    def _close_run(run: list[tuple[int, int]], text: str, entities: list[Entity]) -> None:
        if not run:
            return
        start, end = run[0][0], run[-1][1]
        surface = text[start:end]
        trimmed = surface.strip(_EDGE_PUNCT)
        if not trimmed:
            return
        offset = surface.find(trimmed)
        entities.append(Entity(trimmed, start + offset, start + offset + len(trimmed)))


class JaccardSimilarity:
    """Token-set Jaccard over lowercased whitespace tokens; identical
    strings score 1.0 outright."""

    def score_similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self._score(a, b) for a, b in pairs]

    @staticmethod
    def _score(a: str, b: str) -> float:
        if a == b:
            return 1.0
        ta, tb = set(a.lower().split()), set(b.lower().split())
        union = ta | tb
        if not union:
            return 0.0
        return len(ta & tb) / len(union)


class ExactMatchSimilarity:
    """1.0 iff the two strings are equal after underscore normalization."""

    def score_similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [
            1.0 if normalize_surface(a) == normalize_surface(b) else 0.0
            for a, b in pairs
        ]


class TableSimilarity:
    """Scores looked up from a fixed symmetric pair table. Unlisted
    identical strings score 1.0; other unlisted pairs score `default`."""

    def __init__(self, table: Mapping[tuple[str, str], float], default: float = 0.0):
        for pair, score in table.items():
            if not 0.0 <= score <= 1.0:
                raise InvariantViolation(f"table score {pair} -> {score} outside [0, 1]")
        self._table = dict(table)
        self._default = default

    def score_similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [self._score(a, b) for a, b in pairs]

    def _score(self, a: str, b: str) -> float:
        hit = self._table.get((a, b))
        if hit is None:
            hit = self._table.get((b, a))
        if hit is not None:
            return hit
        return 1.0 if a == b else self._default


class OracleNLI:
    """Entailment consistent with a configured text -> triple-set table.

    Serves both call directions:

    * detection: hypothesis is a known text; the premise (a linearized
      triple set) is parsed back into triples, and the verdict is
      entailment iff the premise set covers every triple the text states;
    * quantification: premise is a known text; the verdict is entailment
      iff the hypothesis equals the linearization of one of its triples.

    Anything else raises in strict mode and is neutral otherwise.
    """

    def __init__(self, tc_table: Mapping[str, Iterable[Triple]], strict: bool = True):
        self._tc = {text: frozenset(triples) for text, triples in tc_table.items()}
        self._strict = strict
        registry: dict[str, Triple] = {}
        for triples in self._tc.values():
            for triple in triples:
                lin = linearize_triple(triple)
                known = registry.get(lin)
                if known is not None and known != triple:
                    raise InvariantViolation(
                        f"linearization collision: {known.to_dict()} and "
                        f"{triple.to_dict()} both render as {lin!r}"
                    )
                registry[lin] = triple
        self._by_linearization = registry
        self._tc_linearized = {
            text: {linearize_triple(t) for t in triples}
            for text, triples in self._tc.items()
        }

    def judge_entailment(self, pairs: Sequence[tuple[str, str]]) -> list[NLIVerdict]:
        validate_nli_pairs(pairs)
        return [self._judge(premise, hypothesis) for premise, hypothesis in pairs]

    def _judge(self, premise: str, hypothesis: str) -> NLIVerdict:
        if hypothesis in self._tc:
            parsed = self._parse_triple_set(premise)
            if parsed is None:
                if self._strict:
                    raise InvariantViolation(
                        f"oracle cannot parse premise {premise!r} into known triples"
                    )
                return verdict_for(NLILabel.NEUTRAL)
            entailed = parsed >= self._tc[hypothesis]
            return verdict_for(NLILabel.ENTAILMENT if entailed else NLILabel.NEUTRAL)
        if premise in self._tc:
            entailed = hypothesis in self._tc_linearized[premise]
            return verdict_for(NLILabel.ENTAILMENT if entailed else NLILabel.NEUTRAL)
        if self._strict:
            raise InvariantViolation(
                f"oracle knows neither side of pair ({premise!r}, {hypothesis!r})"
            )
        return verdict_for(NLILabel.NEUTRAL)

    def _parse_triple_set(self, premise: str) -> frozenset[Triple] | None:
        segments = premise.split(" and ")
        n = len(segments)
        memo: dict[int, frozenset[Triple] | None] = {}

        def parse(i: int) -> frozenset[Triple] | None:
            if i == n:
                return frozenset()
            if i in memo:
                return memo[i]
            result = None
            for j in range(i, n):
                candidate = " and ".join(segments[i:j + 1])
                triple = self._by_linearization.get(candidate)
                if triple is not None:
                    rest = parse(j + 1)
                    if rest is not None:
                        result = frozenset((triple,)) | rest
                        break
            memo[i] = result
            return result

        return parse(0)


_FILLER_SENTENCES = {
    "verbose": "To add some entirely unrelated color, the village notice board "
               "nearby lists {n} community announcements this season.",
    "concise": "A nearby shelf holds {n} spare pamphlets.",
    "numeric-facts": "An incidental tally found {n} pebbles in the courtyard fountain.",
    "related-entities": "A passing acquaintance of the caretaker collects {n} "
                        "vintage postcards.",
    "free": "Someone once counted {n} clouds drifting past this very spot.",
}


class TemplateAugmenter:
    """Appends one fabricated, schema-disjoint filler sentence per text.

    Output depends only on (seed, prompt_id, text), so reruns are
    byte-identical and the original text is always a strict prefix.
    """

    def augment_text(self, texts: Sequence[str], prompt_id: str, seed: int = 0) -> list[str]:
        require_prompt_id(prompt_id)
        out = []
        for text in texts:
            if not text:
                raise EmptyInput("augmentation input text is empty")
            stream = SplitMix64(mix64(seed ^ hash64(prompt_id) ^ hash64(text)))
            n = 10 + stream.below(90)
            out.append(f"{text} {_FILLER_SENTENCES[prompt_id].format(n=n)}")
        return out


def oracle_suite(ner_table: Mapping[str, Sequence[str]],
                 tc_table: Mapping[str, Iterable[Triple]],
                 strict: bool = True) -> BackendSuite:
    """Ground-truth suite: oracle extraction and entailment, exact-match
    similarity, template augmentation."""
    return BackendSuite(
        entity_extractor=OracleEntityExtractor(ner_table, strict=strict),
        similarity_scorer=ExactMatchSimilarity(),
        entailment_judge=OracleNLI(tc_table, strict=strict),
        text_augmenter=TemplateAugmenter(),
    )


def heuristic_suite() -> BackendSuite:
    """Model-free suite without an entailment judge: heuristic extraction,
    Jaccard similarity, template augmentation."""
    return BackendSuite(
        entity_extractor=HeuristicEntityExtractor(),
        similarity_scorer=JaccardSimilarity(),
        entailment_judge=None,
        text_augmenter=TemplateAugmenter(),
    )


def read_truth_file(path) -> tuple[dict[str, list[str]], dict[str, set[Triple]]]:
    """Parse a ground-truth JSONL file into (entity table, triple table).

    Each line is {"text": ..., "entities": [...], "tc": [{"head", "relation",
    "tail"}, ...]}; the tc list is everything the text actually states.
    """
    ner_table: dict[str, list[str]] = {}
    tc_table: dict[str, set[Triple]] = {}
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read truth file {path}: {exc}") from exc
    with handle:
        for lineno, raw in enumerate(handle, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"truth file is not valid JSON: {exc}", line=lineno)
            if not isinstance(record, dict) or "text" not in record:
                raise SchemaViolation("truth record misses 'text'", line=lineno)
            text = record["text"]
            ner_table[text] = [str(s) for s in record.get("entities", [])]
            tc_table[text] = {Triple.from_dict(t) for t in record.get("tc", [])}
    return ner_table, tc_table


def suite_from_truth_file(path, strict: bool = True) -> BackendSuite:
    ner_table, tc_table = read_truth_file(path)
    return oracle_suite(ner_table, tc_table, strict=strict)
