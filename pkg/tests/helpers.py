"""Shared corpus generators and independent oracles for the test suite.

Entity surfaces are fixed-width ("Ent 00042") so no surface is a substring
of another and offset arithmetic in extractor oracles stays trivial. Texts
are the canonical linearization of the triples they state (plus an optional
lowercase salt), which lets the oracle backends be driven by exact tables.
"""

from __future__ import annotations

from hallu_audit.backends import BackendSuite
from hallu_audit.backends.mocks import oracle_suite
from hallu_audit.core import (
    DataPoint,
    Dataset,
    Triple,
    linearize_triple_set,
)
from hallu_audit.corrupt import DetectionSample, HallucinatedText

RELATION = "linked to"
ALT_RELATION = "reports to"


def entity(i: int) -> str:
    return f"Ent {i:05d}"


def chain_triples(start: int, count: int, relation: str = RELATION) -> list[Triple]:
    """`count` triples over 2*count fresh entity indices from `start`."""
    return [
        Triple(entity(start + 2 * j), relation, entity(start + 2 * j + 1))
        for j in range(count)
    ]


def corpus(sizes, *, name: str = "synth", split: str = "train",
           relations=(RELATION,)) -> Dataset:
    """One point per entry of `sizes`, each with that many triples over
    fresh entities, cycling through `relations` triple by triple."""
    points = []
    cursor = 0
    for idx, size in enumerate(sizes):
        triples = [
            Triple(entity(cursor + 2 * j), relations[j % len(relations)],
                   entity(cursor + 2 * j + 1))
            for j in range(size)
        ]
        cursor += 2 * size
        points.append(DataPoint(
            f"pt-{idx:05d}", linearize_triple_set(triples), tuple(triples)
        ))
    return Dataset(name, split, tuple(points))


def truth_tables(*datasets: Dataset):
    """Oracle tables for texts of the given datasets.

    A text is taken to state its point's annotated plus missing triples,
    so tables built from a deletion-corrupted dataset still describe the
    original, uncorrupted content of each text.
    """
    ner_table: dict[str, list[str]] = {}
    tc_table: dict[str, set[Triple]] = {}
    for ds in datasets:
        for point in ds.points:
            described = set(point.triples) | set(point.missing_triples)
            surfaces = set()
            for triple in described:
                norm = triple.normalized()
                surfaces.add(norm.head)
                surfaces.add(norm.tail)
            ner_table[point.text] = sorted(surfaces)
            tc_table[point.text] = described
    return ner_table, tc_table


def suite_for(*datasets: Dataset, strict: bool = True) -> BackendSuite:
    ner_table, tc_table = truth_tables(*datasets)
    return oracle_suite(ner_table, tc_table, strict=strict)


def write_truth_file(path, *datasets: Dataset):
    """Ground-truth JSONL enabling the CLI's --oracle-truth backends."""
    import json

    ner_table, tc_table = truth_tables(*datasets)
    with open(path, "w", encoding="utf-8") as handle:
        for text in ner_table:
            handle.write(json.dumps({
                "text": text,
                "entities": ner_table[text],
                "tc": [t.to_dict() for t in sorted(tc_table[text])],
            }, sort_keys=True) + "\n")
    return path


def subset_chain_corpus(bases: int, *, base_size: int = 2, clean_dups: int = 2,
                        depth: int = 2, name: str = "chains") -> Dataset:
    """Per base: `clean_dups` points annotated with the same triple set T1
    (distinct texts) and `depth` points annotated with nested strict
    supersets T1 ⊂ S1 ⊂ ... ⊂ S_depth, one fresh triple per level."""
    points = []
    cursor = 0
    for base in range(bases):
        t1 = chain_triples(cursor, base_size)
        cursor += 2 * base_size
        stem = linearize_triple_set(t1)
        for dup in range(clean_dups):
            salt = "" if dup == 0 else f" variant {dup:02d}."
            points.append(DataPoint(
                f"pt-{base:05d}-c{dup}", stem + salt, tuple(t1)
            ))
        current = list(t1)
        for level in range(depth):
            current = current + chain_triples(cursor, 1)
            cursor += 2
            points.append(DataPoint(
                f"pt-{base:05d}-s{level}",
                linearize_triple_set(current),
                tuple(current),
            ))
    return Dataset(name, "train", tuple(points))


def brute_force_detection(points) -> list[DetectionSample]:
    """Quadratic reference for the detection-set builder: compare every
    annotation against every other point's annotation directly."""
    points = list(points)
    keys = []
    for point in points:
        key = frozenset(point.triples)
        if key and not any(key == seen for seen in keys):
            keys.append(key)

    samples: list[DetectionSample] = []
    for key in keys:
        clean = [p.text for p in points if frozenset(p.triples) == key]
        hallucinated = []
        for q in points:
            other = set(q.triples)
            if key.issubset(other) and key != other:
                hallucinated.append(
                    HallucinatedText(q.text, q.id, len(other) - len(key))
                )
        if not hallucinated:
            continue
        samples.append(DetectionSample(
            id=f"det-{len(samples):05d}",
            triples=tuple(key),
            clean_texts=tuple(clean),
            hallucinated_texts=tuple(hallucinated),
        ))
    return samples


class CountingJudge:
    """Entailment judge wrapper counting the pairs it is asked about."""

    def __init__(self, inner):
        self.inner = inner
        self.pairs_seen = 0

    def judge_entailment(self, pairs):
        self.pairs_seen += len(pairs)
        return self.inner.judge_entailment(pairs)


def sweep_fixture(n_samples: int = 10):
    """Detection samples plus a table-driven suite shaped so that the NER
    detector is exactly right on thresholds in (0.4, 0.6]: every clean
    text's worst entity score is 0.6, every hallucinated text has one
    extra entity scoring 0.4 against the whole pool.
    """
    from hallu_audit.backends.mocks import OracleEntityExtractor, TableSimilarity

    samples = []
    ner_table: dict[str, list[str]] = {}
    sim_table: dict[tuple[str, str], float] = {}
    for i in range(n_samples):
        head, tail, extra = f"Alpha {i:03d}", f"Gamma {i:03d}", f"Delta {i:03d}"
        head_txt, tail_txt, extra_txt = f"alpha-{i:03d}", f"gamma-{i:03d}", f"delta-{i:03d}"
        triples = (Triple(head, RELATION, tail),)
        clean = f"{head_txt} linked to {tail_txt}"
        hall = f"{head_txt} linked to {tail_txt} and {extra_txt}"
        ner_table[clean] = [head_txt, tail_txt]
        ner_table[hall] = [head_txt, tail_txt, extra_txt]
        sim_table[(head_txt, head)] = 0.6
        sim_table[(tail_txt, tail)] = 0.6
        samples.append(DetectionSample(
            id=f"fix-{i:05d}",
            triples=triples,
            clean_texts=(clean,),
            hallucinated_texts=(HallucinatedText(hall, f"fix-{i:05d}-h", 1),),
        ))
    suite = BackendSuite(
        entity_extractor=OracleEntityExtractor(ner_table),
        similarity_scorer=TableSimilarity(sim_table, default=0.4),
    )
    return samples, suite


def golden_corpus() -> Dataset:
    """Tiny fixed corpus behind the frozen wire-protocol fixtures."""
    t1 = Triple("Ada Lovelace", "field of work", "Mathematics")
    t2 = Triple("Ada Lovelace", "born in", "London")
    t3 = Triple("Charles Babbage", "known for", "Analytical Engine")
    p1 = DataPoint("g-0", linearize_triple_set([t1, t2]), (t1, t2))
    p2 = DataPoint("g-1", linearize_triple_set([t3]), (t3,))
    return Dataset("golden", "train", (p1, p2))
