import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hallu_audit.core import DataPoint, Dataset, ProvenanceRecord, Triple
from hallu_audit.errors import (
    EmptyDataset,
    IndexOutOfRange,
    MalformedJson,
    MalformedXml,
    SchemaViolation,
    TripleParseError,
)
from hallu_audit.ingest import (
    corpus_stats,
    parse_docred_json,
    parse_triple_string,
    parse_webnlg_xml,
    read_canonical,
    sentence_count,
    write_canonical,
)

from helpers import corpus

WEBNLG_XML = b"""<?xml version="1.0" encoding="utf-8"?>
<benchmark>
  <entries>
    <entry category="Astronaut" eid="Id1">
      <modifiedtripleset>
        <mtriple>Alan_Bean | birthDate | 1932-03-15</mtriple>
      </modifiedtripleset>
      <lex>Alan Bean was born on March 15, 1932.</lex>
      <lex>Born on 1932-03-15: Alan Bean.</lex>
    </entry>
    <entry category="Astronaut" eid="Id2">
      <modifiedtripleset>
        <mtriple>Alan_Bean | occupation | Test_pilot</mtriple>
        <mtriple>Alan_Bean | status | Retired</mtriple>
      </modifiedtripleset>
      <lex>Alan Bean is a retired test pilot.</lex>
    </entry>
  </entries>
</benchmark>
"""


def test_webnlg_points_one_per_lexicalization():
    ds = parse_webnlg_xml(WEBNLG_XML, name="wb", source="fixture.xml")
    assert [p.id for p in ds.points] == ["Id1#0", "Id1#1", "Id2#0"]
    assert ds.points[0].text == "Alan Bean was born on March 15, 1932."
    assert ds.points[0].triples == (Triple("Alan_Bean", "birthDate", "1932-03-15"),)
    assert ds.points[2].triples == (
        Triple("Alan_Bean", "occupation", "Test_pilot"),
        Triple("Alan_Bean", "status", "Retired"),
    )
    assert ds.provenance[0].step == "ingest-webnlg-xml"
    assert ds.provenance[0].source == "fixture.xml"


def test_webnlg_positional_and_duplicate_entry_ids():
    xml = b"""<benchmark><entries>
      <entry eid="E"><modifiedtripleset><mtriple>a | r | b</mtriple></modifiedtripleset>
        <lex>a r b.</lex></entry>
      <entry eid="E"><modifiedtripleset><mtriple>c | r | d</mtriple></modifiedtripleset>
        <lex>c r d.</lex></entry>
      <entry><modifiedtripleset><mtriple>e | r | f</mtriple></modifiedtripleset>
        <lex>e r f.</lex></entry>
    </entries></benchmark>"""
    ds = parse_webnlg_xml(xml)
    assert [p.id for p in ds.points] == ["E#0", "E.2#0", "entry2#0"]


def test_webnlg_empty_benchmark_and_malformed_inputs():
    assert len(parse_webnlg_xml(b"<benchmark><entries/></benchmark>")) == 0
    with pytest.raises(MalformedXml):
        parse_webnlg_xml(b"<benchmark><entries>")
    bad_triple = b"""<benchmark><entries><entry eid="X">
      <modifiedtripleset><mtriple>A | b</mtriple></modifiedtripleset>
      <lex>t.</lex></entry></entries></benchmark>"""
    with pytest.raises(TripleParseError) as err:
        parse_webnlg_xml(bad_triple)
    assert "X" in str(err.value)


def test_parse_triple_string_requires_two_separators():
    assert parse_triple_string("a | r | b", "ctx") == Triple("a", "r", "b")
    for raw in ("a | r", "a | r | b | c", "a,r,b"):
        with pytest.raises(TripleParseError):
            parse_triple_string(raw, "ctx")


DOCRED_JSON = json.dumps([
    {
        "title": "Doc One",
        "sents": [["Alice", "works", "at", "Acme", "."],
                  ["She", "joined", "in", "2001", "."]],
        "vertexSet": [
            [{"name": "Alice"}, {"name": "Ms Alice"}],
            [{"name": "Acme"}],
            [{"name": "2001"}],
        ],
        "labels": [
            {"h": 0, "t": 1, "r": "employer"},
            {"h": 0, "t": 2, "r": "start year"},
            {"h": 0, "t": 1, "r": "employer"},
        ],
    },
    {
        "title": "Doc Two",
        "sents": [["Nothing", "annotated", "here", "."]],
        "vertexSet": [],
        "labels": [],
    },
]).encode()


def test_docred_join_dedup_and_first_mention():
    ds = parse_docred_json(DOCRED_JSON, name="dr")
    assert len(ds) == 2
    one = ds.points[0]
    assert one.id == "Doc One"
    assert one.text == "Alice works at Acme . She joined in 2001 ."
    # duplicate label collapses; first mention name wins over "Ms Alice"
    assert one.triples == (
        Triple("Alice", "employer", "Acme"),
        Triple("Alice", "start year", "2001"),
    )
    assert ds.points[1].triples == ()


def test_docred_error_cases():
    with pytest.raises(MalformedJson):
        parse_docred_json(b"{not json")
    with pytest.raises(MalformedJson):
        parse_docred_json(b"{}")
    missing_field = json.dumps([{"title": "t", "sents": [["x"]], "labels": []}])
    with pytest.raises(MalformedJson):
        parse_docred_json(missing_field)
    out_of_range = json.dumps([{
        "title": "T", "sents": [["x", "."]],
        "vertexSet": [[{"name": "a"}], [{"name": "b"}]],
        "labels": [{"h": 5, "t": 1, "r": "r"}],
    }])
    with pytest.raises(IndexOutOfRange) as err:
        parse_docred_json(out_of_range)
    assert err.value.title == "T"


def test_canonical_round_trip_identity(tmp_path):
    ds = corpus([2, 3, 1], name="rt", split="test")
    # plant a missing triple to check the field survives
    p0 = ds.points[0]
    moved = DataPoint(p0.id, p0.text, p0.triples[1:], p0.triples[:1])
    ds = Dataset(ds.name, ds.split, (moved,) + ds.points[1:],
                 (ProvenanceRecord("synth", 1, "unit"),))
    path = tmp_path / "rt.jsonl"
    write_canonical(ds, path)
    back = read_canonical(path)
    assert back == ds
    # byte identity of a re-serialization
    again = tmp_path / "rt2.jsonl"
    write_canonical(back, again)
    assert again.read_bytes() == path.read_bytes()


def test_read_canonical_schema_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = '{"id":"a","text":"t","triples":[],"missing_triples":[]}'
    path.write_text(good + "\n" + '{"id":"b","triples":[]}' + "\n", encoding="utf-8")
    with pytest.raises(SchemaViolation) as err:
        read_canonical(path)
    assert "line 2" in str(err.value)

    path.write_text('{"id":"a","text":"t","triples":"x"}\n', encoding="utf-8")
    with pytest.raises(SchemaViolation) as err:
        read_canonical(path)
    assert "line 1" in str(err.value)

    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        read_canonical(path)


def test_read_canonical_without_manifest_uses_defaults(tmp_path):
    ds = corpus([1], name="ignored")
    path = tmp_path / "standalone.jsonl"
    write_canonical(ds, path)
    (tmp_path / "standalone.manifest.json").unlink()
    back = read_canonical(path)
    assert back.name == "standalone"
    assert back.split == "train"
    assert back.provenance == ()


def test_read_canonical_accepts_plain_manifest_fallback(tmp_path):
    ds = corpus([1], name="named", split="test")
    path = tmp_path / "data.jsonl"
    write_canonical(ds, path)
    (tmp_path / "data.manifest.json").rename(tmp_path / "manifest.json")
    back = read_canonical(path)
    assert back.name == "named"
    assert back.split == "test"


ids_texts = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=25
).filter(lambda s: s.strip())


@given(st.lists(st.tuples(ids_texts, ids_texts), min_size=1, max_size=6))
@settings(max_examples=40)
def test_round_trip_identity_generated(tmp_path_factory, pairs):
    points = []
    for i, (text, surface) in enumerate(pairs):
        points.append(DataPoint(
            f"p{i}", text, (Triple(surface, "rel", f"{surface} tail"),)
        ))
    ds = Dataset("gen", "train", tuple(points))
    path = tmp_path_factory.mktemp("rt") / "gen.jsonl"
    write_canonical(ds, path)
    assert read_canonical(path) == ds


def test_sentence_count_hand_cases():
    assert sentence_count("A. B.") == 2
    assert sentence_count("One! Two? Three.") == 3
    assert sentence_count("No terminator") == 1
    assert sentence_count("Ends mid. word.next") == 2
    # only the final dot is a boundary, leaving a non-empty ".." segment
    assert sentence_count("...") == 1
    assert sentence_count(". ! ?") == 0


def test_corpus_stats_hand_computed():
    t = [Triple("a", "r1", "b"), Triple("c", "r1", "d"), Triple("e", "r2", "f"),
         Triple("g", "r3", "h")]
    points = (
        DataPoint("p1", "A. B.", tuple(t)),
        DataPoint("p2", "Only one sentence", ()),
    )
    stats = corpus_stats(Dataset("s", "train", points))
    assert stats.document_count == 2
    assert stats.total_triples == 4
    assert stats.avg_triples_per_point == pytest.approx(2.0)
    assert stats.avg_sentences_per_point == pytest.approx(1.5)
    assert stats.relation_type_histogram == {"r1": 2, "r2": 1, "r3": 1}
    assert stats.empty_annotation_points == 1
    assert sum(stats.relation_type_histogram.values()) == stats.total_triples


def test_corpus_stats_rejects_empty_dataset():
    with pytest.raises(EmptyDataset):
        corpus_stats(Dataset("e", "train", ()))
