"""Value types of the local citation network and the parsers for LLM outputs
that populate them."""

from __future__ import annotations

import json
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .ingest import CitationSpan, PaperRecord


class FeatureParseError(ValueError):
    """An LLM completion did not have the expected shape."""

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw


# --------------------------------------------------------------------------
# Faceted summaries

FACETS = ("objective", "method", "findings", "contribution", "keywords")
_FACET_LABELS = {
    "objective": "objective",
    "objectives": "objective",
    "method": "method",
    "methods": "method",
    "findings": "findings",
    "finding": "findings",
    "contribution": "contribution",
    "contributions": "contribution",
    "keywords": "keywords",
    "keyword": "keywords",
}
_LABEL_LINE = re.compile(r"^[\s*#>-]*([A-Za-z]+)[\s*]*:[\s*]*(.*)$")


@dataclass(frozen=True)
class FacetedSummary:
    objective: str
    method: str
    findings: str
    contribution: str
    keywords: tuple[str, ...]

    def render(self) -> str:
        return "\n".join(
            [
                f"Objective: {self.objective}",
                f"Method: {self.method}",
                f"Findings: {self.findings}",
                f"Contribution: {self.contribution}",
                f"Keywords: {'; '.join(self.keywords)}",
            ]
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "objective": self.objective,
            "method": self.method,
            "findings": self.findings,
            "contribution": self.contribution,
            "keywords": list(self.keywords),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FacetedSummary:
        return cls(
            data["objective"],
            data["method"],
            data["findings"],
            data["contribution"],
            tuple(data["keywords"]),
        )


def _split_keywords(value: str) -> tuple[str, ...]:
    value = value.strip().rstrip(".").strip()
    sep = ";" if ";" in value or "," not in value else ","
    return tuple(k.strip() for k in value.split(sep) if k.strip())


def parse_faceted_output(completion: str) -> FacetedSummary:
    """Parse ``Label: value`` lines in any order.

    Labels match case-insensitively; lines without a label continue the
    previous facet.  Keywords split on ``;`` with the trailing period dropped.
    """
    values: dict[str, list[str]] = {}
    current: str | None = None
    for line in completion.splitlines():
        if not line.strip():
            continue
        match = _LABEL_LINE.match(line)
        facet = _FACET_LABELS.get(match.group(1).casefold()) if match else None
        if facet is not None:
            current = facet
            values.setdefault(facet, []).append(match.group(2).strip())
        elif current is not None:
            values[current].append(line.strip())
    joined = {k: " ".join(v for v in vs if v) for k, vs in values.items()}
    missing = [f for f in FACETS if not joined.get(f)]
    if missing:
        labels = ", ".join(f.capitalize() for f in missing)
        raise FeatureParseError(f"faceted summary is missing: {labels}", completion)
    keywords = _split_keywords(joined["keywords"])
    if not keywords:
        raise FeatureParseError("faceted summary has no keywords", completion)
    return FacetedSummary(
        objective=joined["objective"],
        method=joined["method"],
        findings=joined["findings"],
        contribution=joined["contribution"],
        keywords=keywords,
    )


# --------------------------------------------------------------------------
# Enriched usage


class UsageClass(str, Enum):
    DOMINANT = "dominant"
    REFERENCE = "reference"


REFERENCE_PHRASES = (
    "as a tool",
    "as a baseline",
    "for reference",
    "as a reference",
    "as an example",
    "for comparison",
    "as background",
)
_USAGE_SHAPE = re.compile(
    r"is known for (?P<known>.+?)(?:,?\s+and\s+it\s+is|[.;]\s+[Ii]t\s+is)\s+cited\s+(?P<cited>.+)",
    re.DOTALL,
)


@dataclass(frozen=True)
class EnrichedUsage:
    paper_id: str
    known_for: str
    cited_for: str
    usage_class: UsageClass
    text: str
    class_source: str = "literal"

    def to_dict(self) -> dict[str, Any]:
        return {
            "paper_id": self.paper_id,
            "known_for": self.known_for,
            "cited_for": self.cited_for,
            "usage_class": self.usage_class.value,
            "class_source": self.class_source,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> EnrichedUsage:
        return cls(
            data["paper_id"],
            data["known_for"],
            data["cited_for"],
            UsageClass(data["usage_class"]),
            data["text"],
            data.get("class_source", "literal"),
        )


def classify_usage_text(text: str) -> tuple[UsageClass, str]:
    """Usage class and how it was decided (``literal`` or ``keyword``)."""
    folded = text.casefold()
    literal = {
        cls for cls in UsageClass if re.search(rf"\b{cls.value}\b", folded)
    }
    if len(literal) == 1:
        return literal.pop(), "literal"
    if any(phrase in folded for phrase in REFERENCE_PHRASES):
        return UsageClass.REFERENCE, "keyword"
    return UsageClass.DOMINANT, "keyword"


def parse_usage_output(paper_id: str, completion: str) -> EnrichedUsage:
    flat = " ".join(completion.split())
    match = _USAGE_SHAPE.search(flat)
    if not match:
        raise FeatureParseError(
            "usage summary lacks the 'is known for ... and it is cited for ...' shape", completion
        )
    cited = match.group("cited").strip().rstrip(".").strip()
    if cited.startswith("for "):
        cited = cited[4:]
    usage_class, source = classify_usage_text(flat)
    return EnrichedUsage(
        paper_id=paper_id,
        known_for=match.group("known").strip().rstrip(".").strip(),
        cited_for=cited,
        usage_class=usage_class,
        text=flat,
        class_source=source,
    )


# --------------------------------------------------------------------------
# Network


class NodeMode(str, Enum):
    FACETED = "faceted"
    ABSTRACT = "abstract"
    TITLE_ONLY = "title-only"


@dataclass(frozen=True)
class PaperMeta:
    paper_id: str
    title: str
    lead_author: str
    year: int | None
    abstract: str = ""
    degraded: bool = False

    @property
    def cite_name(self) -> str:
        """``Author et al. Year`` as the prompt templates spell it."""
        author = self.lead_author or "Anonymous"
        year = self.year if self.year is not None else "n.d."
        return f"{author} et al. {year}"

    @classmethod
    def of(cls, record: PaperRecord) -> PaperMeta:
        return cls(record.paper_id, record.title, record.lead_author, record.year, record.abstract)

    def to_dict(self) -> dict[str, Any]:
        return {
            "paper_id": self.paper_id,
            "title": self.title,
            "lead_author": self.lead_author,
            "year": self.year,
            "abstract": self.abstract,
            "degraded": self.degraded,
        }


@dataclass(frozen=True)
class NodeFeature:
    paper_id: str
    mode: NodeMode
    summary: FacetedSummary | None = None
    abstract: str = ""

    @property
    def content(self) -> str:
        if self.mode is NodeMode.FACETED and self.summary is not None:
            return self.summary.render()
        return self.abstract

    def to_dict(self) -> dict[str, Any]:
        return {
            "paper_id": self.paper_id,
            "mode": self.mode.value,
            "summary": self.summary.to_dict() if self.summary else None,
            "abstract": self.abstract,
        }


@dataclass(frozen=True)
class EdgeRelation:
    from_id: str
    to_id: str
    relation_text: str
    supporting_spans: tuple[CitationSpan, ...] = ()
    marker: str = ""

    def __post_init__(self) -> None:
        if self.from_id == self.to_id:
            raise ValueError("self-citation edges are not allowed")
        if not self.relation_text.strip():
            raise ValueError("relation text is empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "from_id": self.from_id,
            "to_id": self.to_id,
            "relation_text": self.relation_text,
            "marker": self.marker,
            "supporting_spans": [
                {
                    "bib_id": s.bib_id,
                    "host_paper_id": s.host_paper_id,
                    "section_index": s.section_index,
                    "start": s.start,
                    "sentences": list(s.sentences),
                }
                for s in self.supporting_spans
            ],
        }


@dataclass
class CitationNetwork:
    target_id: str
    cited_ids: tuple[str, ...]
    papers: dict[str, PaperMeta] = field(default_factory=dict)
    nodes: dict[str, NodeFeature] = field(default_factory=dict)
    edges: list[EdgeRelation] = field(default_factory=list)
    usages: dict[str, EnrichedUsage] = field(default_factory=dict)

    def incoming(self, paper_id: str) -> list[EdgeRelation]:
        return sorted((e for e in self.edges if e.to_id == paper_id), key=lambda e: e.from_id)

    def check(self) -> None:
        """Raise if graph closure or usage totality is violated."""
        if self.target_id not in self.nodes:
            raise ValueError("target node missing")
        for edge in self.edges:
            if edge.from_id not in self.nodes or edge.to_id not in self.nodes:
                raise ValueError(f"dangling edge {edge.from_id} -> {edge.to_id}")
        for paper_id in self.cited_ids:
            if any(e.to_id == paper_id for e in self.edges) and paper_id not in self.usages:
                raise ValueError(f"cited paper {paper_id} has incoming edges but no usage")
        stray = set(self.usages) - set(self.cited_ids)
        if stray:
            raise ValueError(f"usages for non-cited papers: {sorted(stray)}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "target_id": self.target_id,
            "cited_ids": list(self.cited_ids),
            "papers": {k: self.papers[k].to_dict() for k in sorted(self.papers)},
            "nodes": {k: self.nodes[k].to_dict() for k in sorted(self.nodes)},
            "edges": [
                e.to_dict() for e in sorted(self.edges, key=lambda e: (e.from_id, e.to_id))
            ],
            "usages": {k: self.usages[k].to_dict() for k in sorted(self.usages)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> CitationNetwork:
        papers = {
            k: PaperMeta(
                v["paper_id"], v["title"], v["lead_author"], v["year"], v["abstract"], v["degraded"]
            )
            for k, v in data["papers"].items()
        }
        nodes = {
            k: NodeFeature(
                v["paper_id"],
                NodeMode(v["mode"]),
                FacetedSummary.from_dict(v["summary"]) if v["summary"] else None,
                v["abstract"],
            )
            for k, v in data["nodes"].items()
        }
        edges = [
            EdgeRelation(
                e["from_id"],
                e["to_id"],
                e["relation_text"],
                tuple(
                    CitationSpan(
                        s["bib_id"],
                        tuple(s["sentences"]),
                        s["host_paper_id"],
                        s["section_index"],
                        s["start"],
                        e.get("marker", ""),
                    )
                    for s in e["supporting_spans"]
                ),
                e.get("marker", ""),
            )
            for e in data["edges"]
        ]
        usages = {k: EnrichedUsage.from_dict(v) for k, v in data["usages"].items()}
        return cls(data["target_id"], tuple(data["cited_ids"]), papers, nodes, edges, usages)
