"""Parsed-paper records and the text heuristics that run over them.

Records arrive as UTF-8 JSON produced by an upstream PDF parser (a subset of
the doc2json/S2ORC shape).  Everything here is pure and stateless.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any


class RecordError(ValueError):
    """A paper record failed schema validation.

    ``path`` points at the offending JSON location, e.g. ``sections[2].index``.
    """

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class UnknownBibError(KeyError):
    pass


@dataclass(frozen=True)
class SectionBlock:
    heading: str
    body: str
    index: int


@dataclass(frozen=True)
class BibEntry:
    bib_id: str
    title: str
    first_author_last_name: str
    year: int | None = None

    @property
    def surname(self) -> str:
        # "Jane Smith" and "Smith" both resolve to "Smith"
        parts = self.first_author_last_name.split()
        return parts[-1] if parts else ""


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    title: str
    abstract: str
    sections: tuple[SectionBlock, ...] = ()
    bibliography: tuple[BibEntry, ...] = ()
    year: int | None = None
    authors: tuple[str, ...] = ()

    @property
    def lead_author(self) -> str:
        """Last name of the first author, or empty when no authors are known."""
        if not self.authors:
            return ""
        parts = self.authors[0].split()
        return parts[-1] if parts else ""

    def bib_entry(self, bib_id: str) -> BibEntry:
        for entry in self.bibliography:
            if entry.bib_id == bib_id:
                return entry
        raise UnknownBibError(bib_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "paper_id": self.paper_id,
            "title": self.title,
            "abstract": self.abstract,
            "authors": list(self.authors),
            "year": self.year,
            "sections": [
                {"heading": s.heading, "body": s.body, "index": s.index}
                for s in self.sections
            ],
            "bibliography": [
                {
                    "bib_id": b.bib_id,
                    "title": b.title,
                    "first_author": b.first_author_last_name,
                    "year": b.year,
                }
                for b in self.bibliography
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


@dataclass(frozen=True)
class TaicBundle:
    title: str
    abstract: str
    introduction: str
    conclusion: str
    warnings: tuple[str, ...] = ()


class MentionStyle(str, Enum):
    AUTHOR_YEAR = "author-year"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class CitationMention:
    """One citation marker found in a host text.

    ``bib_id`` is None when the marker does not resolve against the
    bibliography.  ``char_span`` is a half-open range of string indices such
    that ``host[start:end] == surface``.
    """

    bib_id: str | None
    surface: str
    char_span: tuple[int, int]
    style: MentionStyle
    parenthetical: bool = False
    number: int | None = None

    @property
    def resolved(self) -> bool:
        return self.bib_id is not None

    @property
    def marker(self) -> str:
        """How the host paper refers to the cited work, e.g. ``[7]``."""
        if self.style is MentionStyle.NUMERIC and self.number is not None:
            return f"[{self.number}]"
        return self.surface


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class CitationSpan:
    bib_id: str
    sentences: tuple[str, ...]
    host_paper_id: str
    section_index: int = 0
    start: int = 0
    marker: str = ""

    @property
    def position(self) -> tuple[int, int]:
        return (self.section_index, self.start)

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


# --------------------------------------------------------------------------
# Loading


def _expect(value: Any, kind: type | tuple[type, ...], path: str) -> Any:
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise RecordError(path, f"expected {names}, got {type(value).__name__}")
    return value


def _optional_int(value: Any, path: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise RecordError(path, f"expected integer or null, got {type(value).__name__}")
    return value


def _parse_sections(raw: Any) -> tuple[SectionBlock, ...]:
    _expect(raw, list, "sections")
    blocks = []
    previous = -1
    for i, item in enumerate(raw):
        where = f"sections[{i}]"
        _expect(item, dict, where)
        heading = _expect(item.get("heading", ""), str, f"{where}.heading")
        body = _expect(item.get("body", ""), str, f"{where}.body")
        index = item.get("index", i)
        if isinstance(index, bool) or not isinstance(index, int):
            raise RecordError(f"{where}.index", "expected integer")
        if index <= previous:
            raise RecordError(
                f"{where}.index", f"section indices must strictly increase ({index} after {previous})"
            )
        if not body and not heading:
            raise RecordError(where, "section has neither heading nor body")
        previous = index
        blocks.append(SectionBlock(heading=heading, body=body, index=index))
    return tuple(blocks)


def _parse_bibliography(raw: Any) -> tuple[BibEntry, ...]:
    _expect(raw, list, "bibliography")
    entries = []
    seen: set[str] = set()
    for i, item in enumerate(raw):
        where = f"bibliography[{i}]"
        _expect(item, dict, where)
        bib_id = item.get("bib_id")
        if isinstance(bib_id, int) and not isinstance(bib_id, bool):
            bib_id = str(bib_id)
        _expect(bib_id, str, f"{where}.bib_id")
        if not bib_id:
            raise RecordError(f"{where}.bib_id", "must be non-empty")
        if bib_id in seen:
            raise RecordError(f"{where}.bib_id", f"duplicate bib_id {bib_id!r}")
        seen.add(bib_id)
        entries.append(
            BibEntry(
                bib_id=bib_id,
                title=_expect(item.get("title", ""), str, f"{where}.title"),
                first_author_last_name=_expect(
                    item.get("first_author", ""), str, f"{where}.first_author"
                ),
                year=_optional_int(item.get("year"), f"{where}.year"),
            )
        )
    return tuple(entries)


def record_from_dict(data: Mapping[str, Any]) -> PaperRecord:
    _expect(data, dict, "$")
    paper_id = _expect(data.get("paper_id"), str, "paper_id")
    if not paper_id:
        raise RecordError("paper_id", "must be non-empty")
    authors = data.get("authors") or []
    _expect(authors, list, "authors")
    for i, name in enumerate(authors):
        _expect(name, str, f"authors[{i}]")
    return PaperRecord(
        paper_id=paper_id,
        title=_expect(data.get("title"), str, "title"),
        abstract=_expect(data.get("abstract", ""), str, "abstract"),
        sections=_parse_sections(data.get("sections") or []),
        bibliography=_parse_bibliography(data.get("bibliography") or []),
        year=_optional_int(data.get("year"), "year"),
        authors=tuple(authors),
    )


def load_paper_record(raw: bytes | str) -> PaperRecord:
    """Parse one record file.  Unknown keys are ignored."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise RecordError("$", f"not valid UTF-8: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise RecordError("$", f"invalid JSON: {exc}") from exc
    return record_from_dict(data)


def read_paper_record(path: str | Path) -> PaperRecord:
    try:
        return load_paper_record(Path(path).read_bytes())
    except RecordError as exc:
        raise RecordError(f"{path}:{exc.path}", exc.message) from None


def read_corpus(paths: Iterable[str | Path]) -> list[PaperRecord]:
    records = []
    seen: set[str] = set()
    for path in paths:
        record = read_paper_record(path)
        if record.paper_id in seen:
            raise RecordError("paper_id", f"duplicate paper_id {record.paper_id!r} in {path}")
        seen.add(record.paper_id)
        records.append(record)
    return records


# --------------------------------------------------------------------------
# TAIC

INTRO_HEADINGS = ("introduction", "intro")
CONCLUSION_HEADINGS = ("conclusion", "conclusions", "discussion and conclusion")

_NUMBERING = re.compile(r"^(?:[ivxlcdm]+\.|[a-z]\.|\d[\d.]*)\s*")


def normalize_heading(heading: str) -> str:
    """Case-fold, drop leading section numbers and punctuation, squash spaces."""
    text = heading.casefold().strip()
    text = _NUMBERING.sub("", text, count=1)
    text = re.sub(r"[^\w\s]", " ", text)
    return " ".join(text.split())


def _heading_matches(heading: str, prefixes: Sequence[str]) -> bool:
    norm = normalize_heading(heading)
    return any(norm.startswith(p) for p in prefixes)


def extract_taic(record: PaperRecord) -> TaicBundle:
    intro: list[str] = []
    conclusion: list[str] = []
    for section in record.sections:
        if _heading_matches(section.heading, INTRO_HEADINGS):
            intro.append(section.body)
        elif _heading_matches(section.heading, CONCLUSION_HEADINGS):
            conclusion.append(section.body)
    warnings = []
    if not intro:
        warnings.append(f"{record.paper_id}: no introduction section found")
    if not conclusion:
        warnings.append(f"{record.paper_id}: no conclusion section found")
    return TaicBundle(
        title=record.title,
        abstract=record.abstract,
        introduction="\n".join(b for b in intro if b),
        conclusion="\n".join(b for b in conclusion if b),
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# Sentences

DEFAULT_ABBREVIATIONS = ("et al.", "e.g.", "i.e.", "Fig.", "Eq.", "vs.")

# Terminal punctuation, then whitespace, then something that can open a
# sentence: an uppercase letter, possibly behind a quote, or a bracket marker.
_BOUNDARY = re.compile(r"[.?!]+(?=\s+(?:[\"'“‘]?[A-ZÀ-ÖØ-Þ]|\[\d))")


def _ends_with_abbreviation(text: str, end: int, abbreviations: Sequence[str]) -> bool:
    for abbr in abbreviations:
        begin = end - len(abbr)
        if begin < 0 or text[begin:end] != abbr:
            continue
        if begin == 0 or not text[begin - 1].isalnum():
            return True
    return False


def segment_sentences(
    text: str, abbreviations: Sequence[str] = DEFAULT_ABBREVIATIONS
) -> list[Sentence]:
    """Rule-based sentence split with offsets into ``text``.

    Sentences are stripped of surrounding whitespace, never empty, ordered
    and non-overlapping.
    """
    sentences: list[Sentence] = []

    def emit(start: int, end: int) -> None:
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            sentences.append(Sentence(text[start:end], start, end))

    start = 0
    for match in _BOUNDARY.finditer(text):
        if _ends_with_abbreviation(text, match.end(), abbreviations):
            continue
        emit(start, match.end())
        start = match.end()
    emit(start, len(text))
    return sentences


# --------------------------------------------------------------------------
# Citation markers

_NAME = r"[A-ZÀ-ÖØ-Þ][\w'’\-]+"
_AUTHORS = rf"{_NAME}(?:\s+et\s+al\.?|\s+(?:and|&)\s+{_NAME})?"
_YEAR = r"(?:19|20)\d{2}[a-z]?"

_NARRATIVE = re.compile(rf"(?P<auth>{_AUTHORS}),?\s+\((?P<year>{_YEAR})\)")
_BARE = re.compile(rf"(?P<auth>{_AUTHORS}),?\s+(?P<year>{_YEAR})\b")
_PAREN_GROUP = re.compile(r"\(([^()]*)\)")
_PAREN_ITEM = re.compile(
    rf"^\s*(?:(?:see|e\.g\.|cf\.|i\.e\.),?\s+)?(?P<auth>{_AUTHORS}),?\s+(?P<year>{_YEAR})\s*$"
)
_RANGE_ITEM = r"\d+(?:\s*[–-]\s*\d+)?"
_NUMERIC_GROUP = re.compile(rf"\[\s*{_RANGE_ITEM}(?:\s*,\s*{_RANGE_ITEM})*\s*\]")
_NUMERIC_ITEM = re.compile(r"(\d+)(?:\s*[–-]\s*(\d+))?")

# Capitalised words that precede years without being author names.
_NOT_NAMES = frozenset(
    """In Since By From Until Before After During As Of The Figure Fig Table Section
    Eq Equation Appendix Chapter Year Spring Summer Fall Autumn Winter January
    February March April May June July August September October November December
    Early Late Mid Around Circa Through Between And Or""".split()
)
_MAX_RANGE = 50


def _fold(name: str) -> str:
    decomposed = unicodedata.normalize("NFKD", name)
    return "".join(c for c in decomposed if not unicodedata.combining(c)).casefold()


def _first_surname(authors: str) -> str:
    return re.split(r"\s+(?:et\s+al|and|&)\b", authors, maxsplit=1)[0].strip()


def _resolve_author_year(
    surname: str, year_text: str, bibliography: Sequence[BibEntry]
) -> str | None:
    year = int(year_text[:4])
    suffix = year_text[4:]
    key = _fold(surname)
    same_name = [b for b in bibliography if _fold(b.surname) == key]
    dated = [b for b in same_name if b.year == year]
    if dated:
        if suffix and len(dated) > 1:
            pick = ord(suffix) - ord("a")
            if 0 <= pick < len(dated):
                return dated[pick].bib_id
        return dated[0].bib_id
    undated = [b for b in same_name if b.year is None]
    if len(undated) == 1:
        return undated[0].bib_id
    return None


def _resolve_number(number: int, bibliography: Sequence[BibEntry]) -> str | None:
    text = str(number)
    for entry in bibliography:
        if entry.bib_id == text:
            return entry.bib_id
    if 1 <= number <= len(bibliography):
        return bibliography[number - 1].bib_id
    return None


def _author_year_candidates(
    text: str, bibliography: Sequence[BibEntry]
) -> list[tuple[int, int, int, list[CitationMention]]]:
    found = []
    for group in _PAREN_GROUP.finditer(text):
        inner_start = group.start(1)
        offset = 0
        for part in group.group(1).split(";"):
            item = _PAREN_ITEM.match(part)
            if item:
                start = inner_start + offset + item.start("auth")
                end = inner_start + offset + item.end("year")
                surname = _first_surname(item.group("auth"))
                if surname not in _NOT_NAMES:
                    mention = CitationMention(
                        bib_id=_resolve_author_year(surname, item.group("year"), bibliography),
                        surface=text[start:end],
                        char_span=(start, end),
                        style=MentionStyle.AUTHOR_YEAR,
                        parenthetical=True,
                    )
                    found.append((start, end, 0, [mention]))
            offset += len(part) + 1
    for priority, pattern in ((1, _NARRATIVE), (2, _BARE)):
        for match in pattern.finditer(text):
            surname = _first_surname(match.group("auth"))
            if surname in _NOT_NAMES:
                continue
            bib_id = _resolve_author_year(surname, match.group("year"), bibliography)
            strong = pattern is _NARRATIVE or "et al" in match.group("auth")
            if bib_id is None and not strong:
                continue
            start, end = match.span()
            mention = CitationMention(
                bib_id=bib_id,
                surface=text[start:end],
                char_span=(start, end),
                style=MentionStyle.AUTHOR_YEAR,
            )
            found.append((start, end, priority, [mention]))
    return found


def _numeric_candidates(
    text: str, bibliography: Sequence[BibEntry]
) -> list[tuple[int, int, int, list[CitationMention]]]:
    found = []
    for group in _NUMERIC_GROUP.finditer(text):
        mentions = []
        for item in _NUMERIC_ITEM.finditer(text, group.start() + 1, group.end() - 1):
            low = int(item.group(1))
            high = int(item.group(2)) if item.group(2) else low
            if high < low or high - low > _MAX_RANGE:
                mentions = []
                break
            start, end = item.span()
            for number in range(low, high + 1):
                mentions.append(
                    CitationMention(
                        bib_id=_resolve_number(number, bibliography),
                        surface=text[start:end],
                        char_span=(start, end),
                        style=MentionStyle.NUMERIC,
                        number=number,
                    )
                )
        if mentions:
            found.append((group.start(), group.end(), 0, mentions))
    return found


def detect_citation_mentions(
    text: str, bibliography: Sequence[BibEntry] = ()
) -> list[CitationMention]:
    """Find author-year and numeric citation markers in ``text``.

    Overlapping matches are resolved longest-first; parenthesised list items
    beat bare matches of equal length.  Markers that do not resolve against
    ``bibliography`` are returned with ``bib_id=None``.
    """
    candidates = _author_year_candidates(text, bibliography) + _numeric_candidates(
        text, bibliography
    )
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[2], c[0]))
    taken: list[tuple[int, int]] = []
    kept: list[CitationMention] = []
    for start, end, _, mentions in candidates:
        if any(start < t_end and t_start < end for t_start, t_end in taken):
            continue
        taken.append((start, end))
        kept.extend(mentions)
    kept.sort(key=lambda m: (m.char_span[0], m.number or 0))
    return kept


# --------------------------------------------------------------------------
# Citation spans

CONTINUATION_CUES = (
    "Their ",
    "They ",
    "This approach",
    "This method",
    "This model",
    "This work",
    "This system",
    "The authors",
    "These authors",
)
MAX_SPAN_SENTENCES = 3


def _expand(
    sentences: Sequence[Sentence],
    hits: Sequence[int],
    max_sentences: int,
    cues: Sequence[str],
) -> list[tuple[int, int]]:
    ranges: list[tuple[int, int]] = []
    for first in hits:
        if ranges and first <= ranges[-1][1]:
            continue
        last = first
        while (
            last + 1 < len(sentences)
            and last - first + 1 < max_sentences
            and sentences[last + 1].text.startswith(tuple(cues))
        ):
            last += 1
        ranges.append((first, last))
    return ranges


def spans_in_text(
    text: str,
    bibliography: Sequence[BibEntry],
    host_paper_id: str,
    *,
    section_index: int = 0,
    max_sentences: int = MAX_SPAN_SENTENCES,
    cues: Sequence[str] = CONTINUATION_CUES,
) -> dict[str, list[CitationSpan]]:
    """Citation spans for every resolved bib id mentioned in ``text``."""
    sentences = segment_sentences(text)
    mentions = detect_citation_mentions(text, bibliography)
    hits: dict[str, list[int]] = {}
    markers: dict[str, str] = {}
    s = 0
    for mention in mentions:
        if mention.bib_id is None:
            continue
        while s < len(sentences) and sentences[s].end <= mention.char_span[0]:
            s += 1
        if s == len(sentences):
            break
        rows = hits.setdefault(mention.bib_id, [])
        markers.setdefault(mention.bib_id, mention.marker)
        if not rows or rows[-1] != s:
            rows.append(s)
    spans: dict[str, list[CitationSpan]] = {}
    for bib_id, rows in hits.items():
        spans[bib_id] = [
            CitationSpan(
                bib_id=bib_id,
                sentences=tuple(sentences[i].text for i in range(first, last + 1)),
                host_paper_id=host_paper_id,
                section_index=section_index,
                start=sentences[first].start,
                marker=markers[bib_id],
            )
            for first, last in _expand(sentences, rows, max_sentences, cues)
        ]
    return spans


def citation_spans_by_bib(
    record: PaperRecord, *, max_sentences: int = MAX_SPAN_SENTENCES
) -> dict[str, list[CitationSpan]]:
    """All citation spans in the record body, grouped by bib id."""
    grouped: dict[str, list[CitationSpan]] = {}
    for section in record.sections:
        found = spans_in_text(
            section.body,
            record.bibliography,
            record.paper_id,
            section_index=section.index,
            max_sentences=max_sentences,
        )
        for bib_id, spans in found.items():
            grouped.setdefault(bib_id, []).extend(spans)
    return grouped


def extract_citation_spans(
    record: PaperRecord, bib_id: str, *, max_sentences: int = MAX_SPAN_SENTENCES
) -> list[CitationSpan]:
    record.bib_entry(bib_id)
    return citation_spans_by_bib(record, max_sentences=max_sentences).get(bib_id, [])
