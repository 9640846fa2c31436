"""Evaluation kernels: ROUGE, extractive fragments, Kendall's tau, style counts.

One tokenizer serves every metric here and the CTS scorer, so scores compose.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_left, bisect_right, insort
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

from .ingest import CitationMention, MentionStyle

_TOKEN = re.compile(r"[^\W_]+")


def tokenize_for_metrics(text: str) -> list[str]:
    """Case-fold and split on runs of non-alphanumerics.  No stemming."""
    return _TOKEN.findall(text.casefold())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> RougeScore:
        if candidate_total == 0 or reference_total == 0:
            return cls(0.0, 0.0, 0.0)
        p = overlap / candidate_total
        r = overlap / reference_total
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        return cls(p, r, f1)


def _ngrams(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for x in a:
        diag = 0
        for j, y in enumerate(b, start=1):
            above = row[j]
            row[j] = diag + 1 if x == y else max(row[j - 1], above)
            diag = above
    return row[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Whole-sequence LCS variant (not the sentence-level union LCS)."""
    return RougeScore.from_counts(lcs_length(candidate, reference), len(candidate), len(reference))


# --------------------------------------------------------------------------
# Extractiveness


@dataclass(frozen=True)
class Fragment:
    tokens: tuple[str, ...]
    source_start: int
    gen_start: int

    @property
    def length(self) -> int:
        return len(self.tokens)


def extractive_fragments(source: Sequence[str], generated: Sequence[str]) -> list[Fragment]:
    """Greedy shared-fragment scan of the generated sequence.

    At each generated position the longest run that also occurs in the source
    is taken (earliest source occurrence wins ties) and the scan jumps past
    it; positions with no match advance by one.
    """
    where: dict[str, list[int]] = {}
    for j, tok in enumerate(source):
        where.setdefault(tok, []).append(j)
    fragments = []
    i = 0
    while i < len(generated):
        best_len, best_j = 0, -1
        for j in where.get(generated[i], ()):
            k = 0
            while (
                i + k < len(generated)
                and j + k < len(source)
                and generated[i + k] == source[j + k]
            ):
                k += 1
            if k > best_len:
                best_len, best_j = k, j
        if best_len:
            fragments.append(Fragment(tuple(generated[i : i + best_len]), best_j, i))
            i += best_len
        else:
            i += 1
    return fragments


def coverage_density(fragments: Sequence[Fragment], generated_len: int) -> tuple[float, float]:
    if generated_len <= 0:
        raise ValueError("generated text has no tokens")
    lengths = [f.length for f in fragments]
    return sum(lengths) / generated_len, sum(x * x for x in lengths) / generated_len


@dataclass(frozen=True)
class ExtractivenessRow:
    feature: str
    coverage: float
    density: float
    generated_tokens: int


def extractiveness(feature: str, source_text: str, generated_text: str) -> ExtractivenessRow:
    generated = tokenize_for_metrics(generated_text)
    frags = extractive_fragments(tokenize_for_metrics(source_text), generated)
    coverage, density = coverage_density(frags, len(generated))
    return ExtractivenessRow(feature, coverage, density, len(generated))


# --------------------------------------------------------------------------
# Kendall's tau-b


@dataclass(frozen=True)
class CorrelationResult:
    tau: float
    n: int
    concordant: int
    discordant: int
    ties_x: int
    ties_y: int

    @property
    def defined(self) -> bool:
        return not math.isnan(self.tau)


def _tied_pairs(values: Sequence[float]) -> int:
    return sum(c * (c - 1) // 2 for c in Counter(values).values())


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Tau-b with tie correction.

    Pairs are counted by sorting on x and binary-searching each y against the
    y values of strictly smaller x.  An all-tied series yields ``tau = nan``
    instead of raising.
    """
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two paired observations")
    total = n * (n - 1) // 2
    ties_x = _tied_pairs(x)
    ties_y = _tied_pairs(y)

    pairs = sorted(zip(x, y))
    seen: list[float] = []
    concordant = discordant = 0
    i = 0
    while i < n:
        j = i
        while j < n and pairs[j][0] == pairs[i][0]:
            j += 1
        for _, yv in pairs[i:j]:
            concordant += bisect_left(seen, yv)
            discordant += len(seen) - bisect_right(seen, yv)
        for _, yv in pairs[i:j]:
            insort(seen, yv)
        i = j
    denom = (total - ties_x) * (total - ties_y)
    tau = math.nan if denom == 0 else (concordant - discordant) / math.sqrt(denom)
    return CorrelationResult(tau, n, concordant, discordant, ties_x, ties_y)


# --------------------------------------------------------------------------
# Writing style


class DiscourseRole(str, Enum):
    TRANSITION = "Transition"
    SINGLE_SUM = "Single-Sum"
    NARRATIVE = "Narrative"
    REFLECTION = "Reflection"
    MULTI_SUM = "Multi-Sum"


class CitationUsage(str, Enum):
    DOMINANT = "dominant"
    REFERENCE = "reference"


@dataclass(frozen=True)
class StyleLabel:
    sentence_index: int
    discourse_role: DiscourseRole
    citation_types: tuple[CitationUsage, ...] = ()


@dataclass(frozen=True)
class StyleDistribution:
    roles: dict[str, float]
    citation_types: dict[str, float]
    sentences: int
    citations: int = field(default=0)


def style_distribution(labels: Sequence[StyleLabel]) -> StyleDistribution:
    """Percentage of sentences per discourse role and of citations per usage type."""
    if not labels:
        raise ValueError("no style labels given")
    roles = Counter(DiscourseRole(label.discourse_role) for label in labels)
    usages = Counter(CitationUsage(t) for label in labels for t in label.citation_types)
    n_cit = sum(usages.values())
    return StyleDistribution(
        roles={r.value: 100 * roles[r] / len(labels) for r in DiscourseRole if roles[r]},
        citation_types={u.value: 100 * usages[u] / n_cit for u in CitationUsage if usages[u]},
        sentences=len(labels),
        citations=n_cit,
    )


_CLAUSE_BREAK = re.compile(r"[,;:]")
_LEAD_WORDS = frozenset(
    "while and but whereas similarly then also later recently first finally "
    "specifically moreover furthermore however further notably".split()
)
_VERBS = frozenset(
    """is are was were has have had use uses used propose proposes proposed introduce
    introduces introduced present presents presented show shows showed shown develop
    develops developed study studies studied find finds found extend extends extended
    apply applies applied adapt adapts adapted build builds built train trains trained
    describe describes described demonstrate demonstrates demonstrated explore explores
    explored address addresses addressed focus focuses focused provide provides provided
    investigate investigates investigated""".split()
)
_ADVERBS = frozenset("also further first recently then later similarly subsequently".split())


def _looks_like_verb(word: str) -> bool:
    if not word or not word[0].islower():
        return False
    bare = word.split("-")[0]
    return bare in _VERBS or word in _VERBS or bare.endswith("ed") or word.startswith("fine-")


def _in_subject_position(sentence: str, start: int) -> bool:
    before = sentence[:start]
    clause = _CLAUSE_BREAK.split(before)[-1]
    words = clause.split()
    return len(words) <= 2 and all(w.casefold() in _LEAD_WORDS for w in words)


def _followed_by_verb(sentence: str, end: int) -> bool:
    for word in re.findall(r"[\w-]+", sentence[end:])[:3]:
        if word in _ADVERBS:
            continue
        return _looks_like_verb(word)
    return False


def classify_citation_usage_heuristic(
    sentence: str, mentions: Sequence[CitationMention]
) -> list[CitationUsage]:
    """Rule-based dominant/reference guess for each mention in ``sentence``.

    A marker is dominant when it acts as the subject of its clause (nothing
    but a connective before it, a finite-looking verb after it).  Markers
    inside parentheses are always reference.  This is a stand-in for a
    trained tagger and will misfire on unusual syntax.
    """
    usages = []
    for mention in mentions:
        start, end = mention.char_span
        if mention.parenthetical:
            usages.append(CitationUsage.REFERENCE)
            continue
        if mention.style is MentionStyle.NUMERIC:
            # the whole bracket group, not just the number, is the subject
            open_at = sentence.rfind("[", 0, start)
            close_at = sentence.find("]", end)
            start = open_at if open_at != -1 else start
            end = close_at + 1 if close_at != -1 else end
        dominant = _in_subject_position(sentence, start) and _followed_by_verb(sentence, end)
        usages.append(CitationUsage.DOMINANT if dominant else CitationUsage.REFERENCE)
    return usages
