"""Prompt templates, the feature-ablation variants, and chunk planning.

Templates are reproduced verbatim; bump ``TEMPLATE_VERSION`` whenever a byte
changes so cached features are invalidated.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING

from .cache import text_digest
from .ingest import CitationSpan, PaperRecord, TaicBundle, extract_taic
from .llm import estimate_tokens
from .network import CitationNetwork, FacetedSummary, NodeMode, PaperMeta

if TYPE_CHECKING:
    from .cts import CtsSelection

logger = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"
DEFAULT_FIELD = "NLP"


class PromptError(ValueError):
    pass


class MissingFeatureError(PromptError):
    def __init__(self, paper_id: str, feature: str) -> None:
        super().__init__(f"paper {paper_id} lacks required feature: {feature}")
        self.paper_id = paper_id
        self.feature = feature


class PromptBudgetError(PromptError):
    def __init__(self, estimated: int, budget: int) -> None:
        super().__init__(
            f"generation prompt needs ~{estimated} tokens but the budget is {budget}; "
            "re-chunk the cited papers into smaller units"
        )
        self.estimated = estimated
        self.budget = budget


# --------------------------------------------------------------------------
# Variant matrix


class Feature(str, Enum):
    MAIN_IDEA = "main idea"
    TAIC = "target TAIC"
    FACETED = "faceted summary"
    ABSTRACT = "cited abstract"
    USAGE = "intent/usage"
    RELATIONSHIP = "relationship"
    CTS = "CTS"


# Each feature maps to the variants whose prompts include it.
VARIANT_TABLE: dict[Feature, str] = {
    Feature.MAIN_IDEA: "ACDEFGH",
    Feature.TAIC: "ABDEFGH",
    Feature.FACETED: "ABCEFGH",
    Feature.ABSTRACT: "D",
    Feature.USAGE: "ABCDFH",
    Feature.RELATIONSHIP: "ABCDEH",
    Feature.CTS: "H",
}
VARIANT_IDS = tuple("ABCDEFGH")


@dataclass(frozen=True)
class VariantSpec:
    variant_id: str
    use_main_idea: bool
    use_taic: bool
    node_mode: NodeMode
    use_usage: bool
    use_relationship: bool
    use_cts: bool

    def features(self) -> frozenset[Feature]:
        on = {
            Feature.MAIN_IDEA: self.use_main_idea,
            Feature.TAIC: self.use_taic,
            Feature.FACETED: self.node_mode is NodeMode.FACETED,
            Feature.ABSTRACT: self.node_mode is NodeMode.ABSTRACT,
            Feature.USAGE: self.use_usage,
            Feature.RELATIONSHIP: self.use_relationship,
            Feature.CTS: self.use_cts,
        }
        return frozenset(f for f, enabled in on.items() if enabled)


def variant_features(variant_id: str) -> VariantSpec:
    if variant_id not in VARIANT_IDS:
        raise ValueError(f"unknown variant {variant_id!r}; expected one of {''.join(VARIANT_IDS)}")

    def uses(feature: Feature) -> bool:
        return variant_id in VARIANT_TABLE[feature]

    return VariantSpec(
        variant_id=variant_id,
        use_main_idea=uses(Feature.MAIN_IDEA),
        use_taic=uses(Feature.TAIC),
        node_mode=NodeMode.ABSTRACT if uses(Feature.ABSTRACT) else NodeMode.FACETED,
        use_usage=uses(Feature.USAGE),
        use_relationship=uses(Feature.RELATIONSHIP),
        use_cts=uses(Feature.CTS),
    )


# --------------------------------------------------------------------------
# Feature-extraction prompts

FACETED_TEMPLATE = """\
Title: {title}
Abstract: {abstract}
Introduction: {introduction}
Conclusion: {conclusion}
What are the objective, method, findings, contributions and keywords of the paper above? Answer in the format of
Objective: XXX.
Method: XXX.
Findings: XXX.
Contribution: XXX.
Keywords: A; B; C."""

RELATION_TEMPLATE = """\
Faceted summary of the citing paper, {a_title} by {a_name}:
{a_summary}
Faceted summary of the cited paper, {b_title} by {b_name}:
{b_summary}
Citation contexts that {a_name} cites {b_name} (which is cited as {marker}):
{spans}
Very briefly explain the relationship between {a_name} and {b_title} by {b_name}. TLDR:"""

USAGE_GROUP_TEMPLATE = """\
{relation}
Example citation fragments:
{fragments}"""

USAGE_TEMPLATE = """\
How other papers cite {b_name}:
{groups}
Very briefly answer what {b_name} is mostly known for, and the common citation intent. \
Hint: pay attention to how {b_name} is referred by the citing papers. \
Answer in the format of "{b_name} is known for XXX and it is cited for YYY". TLDR:"""

MAIN_IDEA_TEMPLATE = """\
Our title: {title}
Faceted summary of our paper:
{summary}
Write a short summary of the main idea of the following related work section paragraphs. Ignore citations.
{gold}"""


def _enumerate(items: Sequence[str]) -> str:
    return "\n".join(f"{i}. {text}" for i, text in enumerate(items, start=1))


def render_faceted_prompt(source: PaperRecord | TaicBundle) -> str:
    taic = extract_taic(source) if isinstance(source, PaperRecord) else source
    if not taic.abstract.strip():
        raise PromptError(f"paper {taic.title!r} has an empty abstract")
    return FACETED_TEMPLATE.format(
        title=taic.title,
        abstract=taic.abstract,
        introduction=taic.introduction,
        conclusion=taic.conclusion,
    )


def render_relation_prompt(
    a: PaperMeta,
    a_summary: FacetedSummary,
    b: PaperMeta,
    b_summary: FacetedSummary,
    marker: str,
    spans: Sequence[CitationSpan],
) -> str:
    if not spans:
        raise PromptError(f"no citation spans for {a.paper_id} -> {b.paper_id}")
    return RELATION_TEMPLATE.format(
        a_title=a.title,
        a_name=a.cite_name,
        a_summary=a_summary.render(),
        b_title=b.title,
        b_name=b.cite_name,
        b_summary=b_summary.render(),
        marker=marker,
        spans=_enumerate([s.text for s in spans]),
    )


@dataclass(frozen=True)
class UsageGroup:
    citing_id: str
    relation_text: str
    fragments: tuple[str, ...]


def render_usage_prompt(b: PaperMeta, groups: Sequence[UsageGroup]) -> str:
    if not groups:
        raise PromptError(f"no citing papers for {b.paper_id}")
    ordered = sorted(groups, key=lambda g: g.citing_id)
    body = "\n".join(
        USAGE_GROUP_TEMPLATE.format(relation=g.relation_text, fragments=_enumerate(g.fragments))
        for g in ordered
    )
    return USAGE_TEMPLATE.format(b_name=b.cite_name, groups=body)


def render_main_idea_prompt(
    target_title: str, target_summary: FacetedSummary, gold_related_work: str
) -> str:
    if not gold_related_work.strip():
        raise PromptError(
            "no gold related-work text to condense; supply a human-written main-idea plan instead"
        )
    return MAIN_IDEA_TEMPLATE.format(
        title=target_title, summary=target_summary.render(), gold=gold_related_work
    )


# --------------------------------------------------------------------------
# Generation prompt


@dataclass(frozen=True)
class GenerationUnit:
    unit_index: int
    cited_ids: tuple[str, ...]
    gold_layout_label: str
    main_idea: str | None = None
    estimated_tokens: int = 0
    source: str = "single"


@dataclass(frozen=True)
class FeatureDigest:
    feature: Feature
    subject: str
    digest: str


@dataclass(frozen=True)
class PromptBundle:
    variant_id: str
    unit_index: int
    system: str
    user: str
    digests: tuple[FeatureDigest, ...] = ()
    estimated_tokens: int = 0

    @property
    def features(self) -> frozenset[Feature]:
        return frozenset(d.feature for d in self.digests)


@dataclass(frozen=True)
class MainIdeaPlan:
    ideas: tuple[str, ...]
    source: str  # "human-provided" or "condensed-from-gold"
    labels: tuple[str | None, ...] = field(default=())


def assign_main_ideas(
    units: Sequence[GenerationUnit], plan: MainIdeaPlan
) -> tuple[list[GenerationUnit], list[str]]:
    """Attach one idea per unit; short plans reuse their last idea."""
    if not plan.ideas:
        raise PromptError("main-idea plan is empty")
    warnings = []
    if len(plan.ideas) < len(units):
        warnings.append(
            f"main-idea plan has {len(plan.ideas)} entries for {len(units)} units; "
            "reusing the last entry"
        )
    assigned = [
        replace(u, main_idea=plan.ideas[min(i, len(plan.ideas) - 1)]) for i, u in enumerate(units)
    ]
    return assigned, warnings


def chronological(paper_ids: Sequence[str], papers: Mapping[str, PaperMeta]) -> list[str]:
    """Oldest first; ties by first-author surname, then id.  Undated papers last."""

    def key(pid: str) -> tuple:
        meta = papers[pid]
        return (meta.year is None, meta.year or 0, meta.lead_author.casefold(), pid)

    return sorted(paper_ids, key=key)


def _taic_lines(taic: TaicBundle) -> str:
    return "\n".join(
        [
            f"Title: {taic.title}",
            f"Abstract: {taic.abstract}",
            f"Introduction: {taic.introduction}",
            f"Conclusion: {taic.conclusion}",
        ]
    )


def _header(variant: VariantSpec, taic: TaicBundle, field_name: str) -> str:
    lines = []
    if variant.use_taic:
        lines.append(
            "We have finished writing the title, abstract, introduction and conclusion "
            f"section of our {field_name} paper as follows:"
        )
        lines.append(_taic_lines(taic))
        lines.append("However, the related work section is still missing.")
    if variant.use_main_idea:
        lines.append(
            "Write our related work section that concisely cites the following papers "
            "in a natural way using all of the main ideas as the main story."
        )
    else:
        lines.append(
            "Write our related work section that concisely cites the following papers "
            "in a natural way."
        )
    keep_short = "Keep it short, e.g. 3 paragraphs at most."
    if variant.use_taic:
        keep_short += (
            " Make sure the related work section does not conflict with the sections already written."
        )
    lines.append(keep_short)
    if variant.use_main_idea:
        lines.append("You can freely reorder the cited papers to adapt to the main ideas.")
    if variant.use_usage:
        lines.append(
            "Pay extra attention to <Usage> which indicates how each work is cited by other work."
        )
    return "\n".join(lines)


def _cts_block(selection: CtsSelection) -> str:
    lines = ["Potentially useful sentences from this paper:"]
    lines.extend(c.render() for c in selection.chosen)
    return "\n".join(lines)


def render_paper_block(
    variant: VariantSpec,
    number: int,
    paper_id: str,
    network: CitationNetwork,
    cts: Mapping[str, CtsSelection] | None = None,
) -> tuple[str, list[FeatureDigest]]:
    """One entry of the cited-paper list plus the digests of what it includes."""
    meta = network.papers[paper_id]
    lines = [f"{number}. {meta.title} by {meta.cite_name}"]
    digests: list[FeatureDigest] = []
    if meta.degraded:
        # title-only nodes: nothing else is known about the paper
        return "\n".join(lines), digests

    if variant.node_mode is NodeMode.ABSTRACT:
        if not meta.abstract.strip():
            raise MissingFeatureError(paper_id, Feature.ABSTRACT.value)
        lines.append(meta.abstract)
        digests.append(FeatureDigest(Feature.ABSTRACT, paper_id, text_digest(meta.abstract)))
    else:
        node = network.nodes.get(paper_id)
        if node is None or node.summary is None:
            raise MissingFeatureError(paper_id, Feature.FACETED.value)
        rendered = node.summary.render()
        lines.append(rendered)
        digests.append(FeatureDigest(Feature.FACETED, paper_id, text_digest(rendered)))

    if variant.use_usage:
        usage = network.usages.get(paper_id)
        if usage is None:
            raise MissingFeatureError(paper_id, Feature.USAGE.value)
        lines.append(f"<Usage> {usage.text}")
        digests.append(FeatureDigest(Feature.USAGE, paper_id, text_digest(usage.text)))

    if variant.use_relationship:
        incoming = network.incoming(paper_id)
        if not incoming:
            raise MissingFeatureError(paper_id, Feature.RELATIONSHIP.value)
        lines.append("How other papers cite it:")
        for edge in incoming:
            lines.append(edge.relation_text)
            digests.append(
                FeatureDigest(
                    Feature.RELATIONSHIP,
                    f"{edge.from_id}->{edge.to_id}",
                    text_digest(edge.relation_text),
                )
            )

    block = "\n".join(lines)
    if variant.use_cts and cts and cts.get(paper_id) is not None and cts[paper_id].chosen:
        cts_text = _cts_block(cts[paper_id])
        block += "\n\n" + cts_text
        digests.append(FeatureDigest(Feature.CTS, paper_id, text_digest(cts_text)))
    return block, digests


def render_generation_prompt(
    variant: VariantSpec,
    taic: TaicBundle,
    unit: GenerationUnit,
    network: CitationNetwork,
    cts: Mapping[str, CtsSelection] | None = None,
    *,
    budget: int | None = None,
    field_name: str = DEFAULT_FIELD,
) -> PromptBundle:
    digests: list[FeatureDigest] = []
    parts = [_header(variant, taic, field_name)]
    if variant.use_taic:
        digests.append(FeatureDigest(Feature.TAIC, taic.title, text_digest(_taic_lines(taic))))
    if variant.use_main_idea:
        if not unit.main_idea:
            raise MissingFeatureError("<target>", Feature.MAIN_IDEA.value)
        parts.append(f"Main idea of our related work section:\n{unit.main_idea}")
        digests.append(FeatureDigest(Feature.MAIN_IDEA, str(unit.unit_index), text_digest(unit.main_idea)))
    if not unit.cited_ids:
        raise PromptError(f"unit {unit.unit_index} has no cited papers")
    blocks = []
    for number, paper_id in enumerate(chronological(unit.cited_ids, network.papers), start=1):
        block, block_digests = render_paper_block(variant, number, paper_id, network, cts)
        blocks.append(block)
        digests.extend(block_digests)
    parts.append("List of cited papers:\n" + "\n\n".join(blocks))
    user = "\n\n".join(parts)
    estimated = estimate_tokens(user)
    if budget is not None and estimated > budget:
        raise PromptBudgetError(estimated, budget)
    return PromptBundle(
        variant_id=variant.variant_id,
        unit_index=unit.unit_index,
        system="",
        user=user,
        digests=tuple(digests),
        estimated_tokens=estimated,
    )


def generation_overhead(
    variant: VariantSpec,
    taic: TaicBundle,
    main_ideas: Sequence[str] = (),
    field_name: str = DEFAULT_FIELD,
) -> int:
    """Tokens spent on everything but the cited-paper blocks (worst-case idea)."""
    parts = [_header(variant, taic, field_name)]
    if variant.use_main_idea and main_ideas:
        longest = max(main_ideas, key=len)
        parts.append(f"Main idea of our related work section:\n{longest}")
    parts.append("List of cited papers:\n")
    return estimate_tokens("\n\n".join(parts))


# --------------------------------------------------------------------------
# Chunk planning


class ChunkingError(PromptError):
    pass


@dataclass(frozen=True)
class ChunkItem:
    paper_id: str
    tokens: int


def _unit(index: int, items: Sequence[ChunkItem], label: str, overhead: int, source: str) -> GenerationUnit:
    return GenerationUnit(
        unit_index=index,
        cited_ids=tuple(i.paper_id for i in items),
        gold_layout_label=label,
        estimated_tokens=overhead + sum(i.tokens for i in items),
        source=source,
    )


def plan_chunks(
    cited: Sequence[ChunkItem],
    gold_layout: Sequence[tuple[str, Sequence[str]]] | None,
    budget: int,
    fixed_overhead_tokens: int,
) -> list[GenerationUnit]:
    """Split cited papers into generation units that each fit ``budget``.

    One unit when everything fits; otherwise one unit per gold-layout group
    (in layout order), or a greedy order-preserving packing when no layout
    is given.
    """
    if budget <= fixed_overhead_tokens:
        raise ChunkingError(f"budget {budget} leaves no room after {fixed_overhead_tokens} overhead tokens")
    if not cited:
        raise ChunkingError("no cited papers to plan")
    room = budget - fixed_overhead_tokens
    for item in cited:
        if item.tokens > room:
            raise ChunkingError(
                f"paper {item.paper_id} alone needs {item.tokens} tokens; only {room} fit"
            )
    if sum(i.tokens for i in cited) <= room:
        return [_unit(0, cited, "full", fixed_overhead_tokens, "single")]

    if gold_layout:
        by_id = {i.paper_id: i for i in cited}
        placed: set[str] = set()
        units = []
        for label, ids in gold_layout:
            unknown = [pid for pid in ids if pid not in by_id]
            if unknown:
                raise ChunkingError(f"layout group {label!r} names unknown papers {unknown}")
            members = [i for i in cited if i.paper_id in set(ids) and i.paper_id not in placed]
            if not members:
                continue
            placed.update(i.paper_id for i in members)
            unit = _unit(len(units), members, label, fixed_overhead_tokens, "gold")
            if unit.estimated_tokens > budget:
                raise ChunkingError(f"layout group {label!r} needs {unit.estimated_tokens} tokens > {budget}")
            units.append(unit)
        leftover = [i for i in cited if i.paper_id not in placed]
        if leftover:
            logger.warning("%d cited papers absent from the layout form an extra unit", len(leftover))
            units.append(_unit(len(units), leftover, "unassigned", fixed_overhead_tokens, "gold"))
        return units

    units = []
    current: list[ChunkItem] = []
    used = 0
    for item in cited:
        if current and used + item.tokens > room:
            units.append(_unit(len(units), current, f"chunk-{len(units) + 1}", fixed_overhead_tokens, "greedy"))
            current, used = [], 0
        current.append(item)
        used += item.tokens
    units.append(_unit(len(units), current, f"chunk-{len(units) + 1}", fixed_overhead_tokens, "greedy"))
    return units


# --------------------------------------------------------------------------
# Plan files


def parse_plan_text(text: str) -> list[tuple[str | None, str]]:
    """Split a plan file into ``(label, body)`` units.

    Units are separated by lines consisting of ``---``; a leading ``# label``
    line names the unit.
    """
    units = []
    chunk: list[str] = []

    def flush() -> None:
        lines = list(chunk)
        chunk.clear()
        while lines and not lines[0].strip():
            lines.pop(0)
        label = None
        if lines and lines[0].startswith("# "):
            label = lines.pop(0)[2:].strip()
        body = "\n".join(lines).strip()
        if body or label:
            units.append((label, body))

    for line in text.splitlines():
        if line.strip() == "---":
            flush()
        else:
            chunk.append(line)
    flush()
    return units
