import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from litreview.ingest import (
    BibEntry,
    MentionStyle,
    PaperRecord,
    RecordError,
    SectionBlock,
    UnknownBibError,
    detect_citation_mentions,
    extract_citation_spans,
    extract_taic,
    load_paper_record,
    normalize_heading,
    read_corpus,
    segment_sentences,
    spans_in_text,
)

BIB = (
    BibEntry("b1", "A Paper", "Smith", 2023),
    BibEntry("b2", "Another", "Radford", 2019),
    BibEntry("b3", "Third", "Luu", 2021),
)


def test_loads_fixture_and_round_trips():
    raw = (FIXTURES / "target_paper.json").read_text()
    record = load_paper_record(raw)
    assert record.paper_id == "target"
    assert len(record.bibliography) == 6
    assert load_paper_record(record.dumps()) == record


names = st.text(st.characters(whitelist_categories=("Lu", "Ll")), min_size=1, max_size=8)
bodies = st.text(st.characters(blacklist_categories=("Cs",)), max_size=40)


@settings(max_examples=60)
@given(
    title=bodies,
    abstract=bodies,
    sections=st.lists(st.tuples(names, bodies), max_size=4),
    bib=st.lists(st.tuples(bodies, names, st.one_of(st.none(), st.integers(1900, 2100))), max_size=4),
    year=st.one_of(st.none(), st.integers(1900, 2100)),
)
def test_record_round_trip_property(title, abstract, sections, bib, year):
    record = PaperRecord(
        "p1", title, abstract,
        tuple(SectionBlock(h, b, i) for i, (h, b) in enumerate(sections)),
        tuple(BibEntry(f"b{i}", t, a, y) for i, (t, a, y) in enumerate(bib)),
        year, ("Ann Author",),
    )
    assert load_paper_record(record.dumps()) == record


def test_rejects_malformed_records():
    with pytest.raises(RecordError):
        load_paper_record("{not json")
    base = json.loads((FIXTURES / "target_paper.json").read_text())
    base["sections"][1]["index"] = 0
    with pytest.raises(RecordError, match="index"):
        load_paper_record(json.dumps(base))
    base = json.loads((FIXTURES / "target_paper.json").read_text())
    base["bibliography"].append(dict(base["bibliography"][0]))
    with pytest.raises(RecordError, match="b1"):
        load_paper_record(json.dumps(base))


def test_null_lists_are_empty():
    record = load_paper_record('{"paper_id": "x", "title": "T", "abstract": "A", "sections": null, "bibliography": null}')
    assert record.sections == () and record.bibliography == ()


def test_read_corpus_reports_path(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    with pytest.raises(RecordError) as info:
        read_corpus([bad])
    assert "bad.json" in str(info.value)


@pytest.mark.parametrize(
    "heading, expected",
    [
        ("1. Introduction", "introduction"),
        ("II. Conclusions", "conclusions"),
        ("A. Discussion and Conclusion", "discussion and conclusion"),
        ("5 Conclusion:", "conclusion"),
        ("A Survey", "a survey"),
    ],
)
def test_normalize_heading(heading, expected):
    assert normalize_heading(heading) == expected


def test_taic_concatenates_and_warns():
    record = PaperRecord(
        "p", "T", "Abs",
        (
            SectionBlock("1 Intro", "First.", 0),
            SectionBlock("1.1 Introduction continued", "Second.", 1),
            SectionBlock("Method", "M.", 2),
        ),
    )
    taic = extract_taic(record)
    assert taic.introduction == "First.\nSecond."
    assert taic.conclusion == ""
    assert any("conclusion" in w.casefold() for w in taic.warnings)


def test_taic_of_fixture(target):
    taic = extract_taic(target)
    assert taic.introduction.startswith("Writing a related work section")
    assert taic.conclusion.startswith("Features from the citation network")
    assert not taic.warnings


def test_sentence_splitter_abbreviations():
    text = "Smith et al. (2023) show this, e.g. in Fig. 2. Then it ends. [1] starts another."
    sentences = segment_sentences(text)
    assert [s.text for s in sentences] == [
        "Smith et al. (2023) show this, e.g. in Fig. 2.",
        "Then it ends.",
        "[1] starts another.",
    ]
    for s in sentences:
        assert text[s.start : s.end] == s.text


def test_author_year_mentions():
    text = "Smith et al. (2023) extend this (Radford et al., 2019; Luu et al., 2021)."
    mentions = detect_citation_mentions(text, BIB)
    assert [m.bib_id for m in mentions] == ["b1", "b2", "b3"]
    assert [m.parenthetical for m in mentions] == [False, True, True]
    for m in mentions:
        assert text[m.char_span[0] : m.char_span[1]] == m.surface


def test_numeric_mentions_with_ranges():
    text = "Prior work [1-3] and [2, 3] exists."
    mentions = detect_citation_mentions(text, BIB)
    assert [m.bib_id for m in mentions] == ["b1", "b2", "b3", "b2", "b3"]
    assert {m.style for m in mentions} == {MentionStyle.NUMERIC}


def test_unresolved_and_non_citations():
    assert detect_citation_mentions("(see Figure 3) in 2020.", BIB) == []
    mentions = detect_citation_mentions("Jones et al. (2001) did it.", BIB)
    assert len(mentions) == 1 and mentions[0].bib_id is None


@settings(max_examples=80)
@given(st.lists(st.sampled_from(["Smith et al. (2023)", "[2]", "(Luu et al., 2021)", "word", "x.", " "]), max_size=12))
def test_mention_spans_slice_back(parts):
    text = " ".join(parts)
    for m in detect_citation_mentions(text, BIB):
        assert text[m.char_span[0] : m.char_span[1]] == m.surface


def test_span_expands_over_continuation_cues():
    text = "Smith et al. (2023) built a parser. Their parser is fast. They also tag. This work is big. Unrelated."
    spans = spans_in_text(text, BIB, "host")["b1"]
    assert len(spans) == 1
    assert len(spans[0].sentences) == 3


def test_extract_citation_spans(cited):
    devlin = next(r for r in cited if r.paper_id == "devlin")
    spans = extract_citation_spans(devlin, "b1")
    assert spans and all(s.host_paper_id == "devlin" for s in spans)
    with pytest.raises(UnknownBibError):
        extract_citation_spans(devlin, "b99")
