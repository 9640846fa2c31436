"""Cited-text-span retrieval by ROUGE recall against draft citation spans."""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .ingest import (
    BibEntry,
    PaperRecord,
    TaicBundle,
    normalize_heading,
    segment_sentences,
    spans_in_text,
)
from .llm import estimate_tokens
from .metrics import rouge_n, tokenize_for_metrics
from .network import CitationNetwork
from .prompts import (
    GenerationUnit,
    PromptBundle,
    render_generation_prompt,
    variant_features,
)

logger = logging.getLogger(__name__)

MAX_K = 10
RELATED_WORK_HEADINGS = ("related work", "related works", "prior work", "previous work", "literature review")


class CtsError(ValueError):
    pass


@dataclass(frozen=True)
class CtsQuery:
    cited_id: str
    query_span: str
    k_cap: int = MAX_K
    token_budget_for_cts: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.k_cap <= MAX_K:
            raise CtsError(f"k_cap must be within 1..{MAX_K}, got {self.k_cap}")


@dataclass(frozen=True)
class CtsCandidate:
    sentence: str
    section_heading: str
    position: int
    score: float

    def render(self) -> str:
        return f"[{self.section_heading}] {self.sentence}" if self.section_heading else self.sentence

    def to_dict(self) -> dict[str, Any]:
        return {
            "sentence": self.sentence,
            "heading": self.section_heading,
            "position": self.position,
            "score": self.score,
        }


@dataclass(frozen=True)
class CtsSelection:
    cited_id: str
    chosen: tuple[CtsCandidate, ...]

    @property
    def k_effective(self) -> int:
        return len(self.chosen)

    def to_dict(self) -> dict[str, Any]:
        return {
            "cited_id": self.cited_id,
            "k_effective": self.k_effective,
            "chosen": [c.to_dict() for c in self.chosen],
        }

    def write(self, directory: str | Path) -> Path:
        path = Path(directory) / f"{self.cited_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return path


def extract_query_spans(draft: str, bibliography: Sequence[BibEntry]) -> dict[str, list[str]]:
    """Citation spans of ``draft`` per bib id; unmentioned ids map to []."""
    if not draft.strip():
        raise CtsError("draft is empty")
    found = spans_in_text(draft, bibliography, "<draft>")
    return {b.bib_id: [s.text for s in found.get(b.bib_id, [])] for b in bibliography}


def score_candidate(query: str, sentence: str) -> float:
    """Mean of ROUGE-1 and ROUGE-2 recall, with the query as reference."""
    ref = tokenize_for_metrics(query)
    if not ref:
        logger.warning("empty CTS query; scoring as 0")
        return 0.0
    cand = tokenize_for_metrics(sentence)
    return (rouge_n(cand, ref, 1).recall + rouge_n(cand, ref, 2).recall) / 2


def candidate_sentences(
    record: PaperRecord, *, exclude_related_work: bool = True
) -> list[tuple[str, str, int]]:
    """``(sentence, heading, position)`` for every body sentence."""
    pool = []
    position = 0
    for section in record.sections:
        if exclude_related_work and normalize_heading(section.heading).startswith(RELATED_WORK_HEADINGS):
            continue
        for sentence in segment_sentences(section.body):
            pool.append((sentence.text, section.heading, position))
            position += 1
    return pool


def rank_candidates(query: str, pool: Sequence[tuple[str, str, int]]) -> list[CtsCandidate]:
    scored = [CtsCandidate(text, heading, pos, score_candidate(query, text)) for text, heading, pos in pool]
    scored.sort(key=lambda c: (-c.score, c.position))
    return scored


def retrieve_cts(
    query: CtsQuery, cited_record: PaperRecord, *, exclude_related_work: bool = True
) -> CtsSelection:
    pool = candidate_sentences(cited_record, exclude_related_work=exclude_related_work)
    if not pool:
        raise CtsError(f"paper {cited_record.paper_id} has no body sentences to retrieve from")
    chosen = rank_candidates(query.query_span, pool)[: query.k_cap]
    if query.token_budget_for_cts is not None:
        while chosen and estimate_tokens("\n".join(c.render() for c in chosen)) > query.token_budget_for_cts:
            chosen.pop()
    return CtsSelection(query.cited_id, tuple(chosen))


def augment_with_cts(
    taic: TaicBundle,
    unit: GenerationUnit,
    network: CitationNetwork,
    selections: Mapping[str, CtsSelection],
    *,
    budget: int | None = None,
    field_name: str = "NLP",
) -> PromptBundle:
    """Variant-H prompt: the variant-A prompt plus per-paper CTS blocks."""
    stray = set(selections) - set(unit.cited_ids)
    if stray:
        raise CtsError(f"selections for papers outside unit {unit.unit_index}: {sorted(stray)}")
    return render_generation_prompt(
        variant_features("H"), taic, unit, network, selections, budget=budget, field_name=field_name
    )
