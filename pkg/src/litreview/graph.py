"""Build the local citation network around a target paper.

Nodes carry faceted summaries, directed edges carry one-line relationship
descriptions, and every cited paper with incoming edges gets an enriched
usage summary.  All three are LLM-derived and cached by prompt content.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, TypeVar

from .cache import FeatureCache, FeatureCacheKey
from .ingest import CitationSpan, PaperRecord, citation_spans_by_bib
from .llm import BackendError, LLMClient, estimate_tokens
from .network import (
    CitationNetwork,
    EdgeRelation,
    EnrichedUsage,
    FacetedSummary,
    NodeFeature,
    NodeMode,
    PaperMeta,
    parse_faceted_output,
    parse_usage_output,
)
from .prompts import (
    TEMPLATE_VERSION,
    UsageGroup,
    render_faceted_prompt,
    render_main_idea_prompt,
    render_relation_prompt,
    render_usage_prompt,
)

logger = logging.getLogger(__name__)

MAX_RELATION_SPANS = 8

T = TypeVar("T")


class NetworkError(ValueError):
    pass


class FeatureExtractionError(RuntimeError):
    """The backend failed for good; ``key`` identifies the cache slot."""

    def __init__(self, key: FeatureCacheKey, cause: Exception) -> None:
        super().__init__(f"{key.operation} failed (cache key {key.digest[:16]}): {cause}")
        self.key = key
        self.cause = cause


class FeatureExtractor:
    """LLM-backed feature derivation with content-addressed caching."""

    def __init__(
        self,
        client: LLMClient,
        cache: FeatureCache | None = None,
        *,
        template_version: str = TEMPLATE_VERSION,
        max_in_flight: int = 4,
    ) -> None:
        self.client = client
        self.cache = cache
        self.template_version = template_version
        self.max_in_flight = max_in_flight

    def _derive(self, operation: str, prompt: str, parse: Callable[[str], Any]) -> Any:
        key = FeatureCacheKey.for_prompt(
            operation, prompt, self.client.profile.model_id, self.template_version
        )

        def produce() -> tuple[str, Any]:
            try:
                response = self.client.complete(
                    self.client.request(prompt), stage="features", operation=operation
                )
            except BackendError as exc:
                raise FeatureExtractionError(key, exc) from exc
            return response.content, parse(response.content)

        if self.cache is None:
            return produce()[1]
        return self.cache.memoize(key, produce)

    def map(self, fn: Callable[[Any], T], items: Iterable[Any]) -> list[T]:
        items = list(items)
        if self.max_in_flight <= 1 or len(items) <= 1:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            return list(pool.map(fn, items))

    def faceted_summary(self, record: PaperRecord) -> FacetedSummary:
        prompt = render_faceted_prompt(record)
        value = self._derive(
            "faceted_summary", prompt, lambda raw: parse_faceted_output(raw).to_dict()
        )
        return FacetedSummary.from_dict(value)

    def edge_relation(
        self,
        a: PaperMeta,
        a_summary: FacetedSummary,
        b: PaperMeta,
        b_summary: FacetedSummary,
        spans: Sequence[CitationSpan],
    ) -> EdgeRelation:
        if not spans:
            raise NetworkError(f"no citation spans for {a.paper_id} -> {b.paper_id}")
        wrong = [s for s in spans if s.host_paper_id != a.paper_id]
        if wrong:
            raise NetworkError(
                f"spans hosted by {wrong[0].host_paper_id} passed for edge {a.paper_id} -> {b.paper_id}"
            )
        ordered = sorted(spans, key=lambda s: s.position)
        marker = ordered[0].marker or b.cite_name
        prompt = render_relation_prompt(a, a_summary, b, b_summary, marker, ordered)
        if estimate_tokens(prompt) > self.client.profile.input_token_budget:
            ordered = ordered[:MAX_RELATION_SPANS]
            prompt = render_relation_prompt(a, a_summary, b, b_summary, marker, ordered)
        text = self._derive("edge_relation", prompt, lambda raw: raw.strip())
        return EdgeRelation(a.paper_id, b.paper_id, text, tuple(ordered), marker)

    def enriched_usage(self, b: PaperMeta, incident: Sequence[EdgeRelation]) -> EnrichedUsage:
        if not incident:
            raise NetworkError(f"no incident edges for {b.paper_id}")
        for edge in incident:
            if edge.to_id != b.paper_id:
                raise NetworkError(f"edge {edge.from_id} -> {edge.to_id} is not incident to {b.paper_id}")
        groups = [
            UsageGroup(e.from_id, e.relation_text, tuple(s.text for s in e.supporting_spans))
            for e in incident
        ]
        prompt = render_usage_prompt(b, groups)
        value = self._derive(
            "enriched_usage", prompt, lambda raw: parse_usage_output(b.paper_id, raw).to_dict()
        )
        return EnrichedUsage.from_dict(value)

    def main_idea(self, title: str, summary: FacetedSummary, gold_chunk: str) -> str:
        prompt = render_main_idea_prompt(title, summary, gold_chunk)
        return self._derive("main_idea", prompt, lambda raw: raw.strip())


def derive_faceted_summary(record: PaperRecord, extractor: FeatureExtractor) -> FacetedSummary:
    return extractor.faceted_summary(record)


def derive_edge_relation(
    a: PaperMeta,
    a_summary: FacetedSummary,
    b: PaperMeta,
    b_summary: FacetedSummary,
    spans: Sequence[CitationSpan],
    extractor: FeatureExtractor,
) -> EdgeRelation:
    return extractor.edge_relation(a, a_summary, b, b_summary, spans)


def derive_enriched_usage(
    b: PaperMeta, incident: Sequence[EdgeRelation], extractor: FeatureExtractor
) -> EnrichedUsage:
    return extractor.enriched_usage(b, incident)


# --------------------------------------------------------------------------
# Bibliography resolution


def _norm_title(title: str) -> str:
    folded = unicodedata.normalize("NFKD", title).casefold()
    return re.sub(r"[^0-9a-z]+", " ", folded).strip()


def _fold(name: str) -> str:
    decomposed = unicodedata.normalize("NFKD", name)
    return "".join(c for c in decomposed if not unicodedata.combining(c)).casefold()


def resolve_bibliography(record: PaperRecord, papers: Sequence[PaperMeta]) -> dict[str, str]:
    """Map bib ids of ``record`` to paper ids among ``papers``.

    Exact normalized-title match first, then a unique (surname, year) match.
    """
    by_title: dict[str, list[str]] = {}
    by_author: dict[tuple[str, int | None], list[str]] = {}
    for meta in papers:
        if meta.paper_id == record.paper_id:
            continue
        by_title.setdefault(_norm_title(meta.title), []).append(meta.paper_id)
        if meta.lead_author:
            by_author.setdefault((_fold(meta.lead_author), meta.year), []).append(meta.paper_id)
    resolved = {}
    for entry in record.bibliography:
        hits = by_title.get(_norm_title(entry.title), []) if entry.title else []
        if len(hits) != 1:
            hits = by_author.get((_fold(entry.surname), entry.year), [])
        if len(hits) == 1:
            resolved[entry.bib_id] = hits[0]
    return resolved


# --------------------------------------------------------------------------
# Network construction


def build_network(
    target: PaperRecord,
    cited: Sequence[PaperRecord],
    extra_citing: Sequence[PaperRecord] = (),
    *,
    extractor: FeatureExtractor,
    expected_cited: Sequence[str] | None = None,
) -> CitationNetwork:
    """Derive every node, edge and usage feature of the local network.

    ``expected_cited`` lists bib ids of the target that the literature review
    must cover; those without a record become title-only (degraded) nodes.
    """
    if not cited:
        raise NetworkError("at least one cited paper is required")
    records: dict[str, PaperRecord] = {}
    for record in [target, *cited, *extra_citing]:
        if record.paper_id in records:
            raise NetworkError(f"paper {record.paper_id} appears twice")
        records[record.paper_id] = record

    papers = {pid: PaperMeta.of(r) for pid, r in records.items()}
    cited_ids = [r.paper_id for r in cited]

    if expected_cited:
        target_links = resolve_bibliography(target, list(papers.values()))
        for bib_id in expected_cited:
            entry = target.bib_entry(bib_id)
            if bib_id in target_links:
                continue
            node_id = f"bib:{bib_id}"
            logger.warning("no record for cited paper %s (%s); using title only", bib_id, entry.title)
            papers[node_id] = PaperMeta(
                node_id, entry.title, entry.surname, entry.year, degraded=True
            )
            cited_ids.append(node_id)

    full_ids = sorted(records)
    summaries = dict(zip(full_ids, extractor.map(lambda pid: extractor.faceted_summary(records[pid]), full_ids)))
    nodes = {pid: NodeFeature(pid, NodeMode.FACETED, summaries[pid], papers[pid].abstract) for pid in full_ids}
    for pid, meta in papers.items():
        if meta.degraded:
            nodes[pid] = NodeFeature(pid, NodeMode.TITLE_ONLY)

    metas = list(papers[pid] for pid in full_ids)
    pairs: list[tuple[str, str, list[CitationSpan]]] = []
    for a_id in full_ids:
        links = resolve_bibliography(records[a_id], metas)
        spans = citation_spans_by_bib(records[a_id])
        merged: dict[str, list[CitationSpan]] = {}
        for bib_id, b_id in links.items():
            if spans.get(bib_id):
                merged.setdefault(b_id, []).extend(spans[bib_id])
        for b_id in sorted(merged):
            pairs.append((a_id, b_id, merged[b_id]))

    def make_edge(pair: tuple[str, str, list[CitationSpan]]) -> EdgeRelation:
        a_id, b_id, spans = pair
        return extractor.edge_relation(
            papers[a_id], summaries[a_id], papers[b_id], summaries[b_id], spans
        )

    edges = extractor.map(make_edge, pairs)

    incoming: dict[str, list[EdgeRelation]] = {}
    for edge in edges:
        incoming.setdefault(edge.to_id, []).append(edge)
    usage_ids = [pid for pid in cited_ids if pid in incoming]
    derived = extractor.map(
        lambda pid: extractor.enriched_usage(papers[pid], sorted(incoming[pid], key=lambda e: e.from_id)),
        usage_ids,
    )
    network = CitationNetwork(
        target_id=target.paper_id,
        cited_ids=tuple(cited_ids),
        papers=papers,
        nodes=nodes,
        edges=sorted(edges, key=lambda e: (e.from_id, e.to_id)),
        usages=dict(zip(usage_ids, derived)),
    )
    network.check()
    return network
