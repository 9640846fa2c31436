import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from litreview.metrics import (
    CitationUsage,
    DiscourseRole,
    StyleLabel,
    classify_citation_usage_heuristic,
    coverage_density,
    extractive_fragments,
    extractiveness,
    kendall_tau,
    lcs_length,
    rouge_l,
    rouge_n,
    style_distribution,
    tokenize_for_metrics,
)
from litreview.ingest import BibEntry, detect_citation_mentions
from oracles import lcs_oracle

toks = st.lists(st.sampled_from("abcd"), max_size=12)


def test_tokenizer_casefolds_and_drops_punctuation():
    assert tokenize_for_metrics("The cat_sat, ON the-mat!") == ["the", "cat", "sat", "on", "the", "mat"]


def test_rouge_worked_example():
    cand = "the cat sat on the mat".split()
    ref = "the cat lay on the mat".split()
    assert rouge_n(cand, ref, 1).recall == pytest.approx(5 / 6)
    assert rouge_n(cand, ref, 2).recall == pytest.approx(3 / 5)
    assert lcs_length(cand, ref) == 5
    assert rouge_l(cand, ref).recall == pytest.approx(5 / 6)


def test_rouge_edge_cases():
    assert rouge_n([], ["a"], 1).f1 == 0.0
    assert rouge_l(["a"], []).f1 == 0.0
    with pytest.raises(ValueError):
        rouge_n(["a"], ["a"], 0)


@given(toks, toks)
def test_rouge_symmetry_and_bounds(a, b):
    ab, ba = rouge_n(a, b, 1), rouge_n(b, a, 1)
    assert ab.precision == ba.recall and ab.f1 == ba.f1
    assert 0.0 <= ab.f1 <= 1.0
    assert lcs_length(a, b) == lcs_oracle(a, b)


@given(toks)
def test_identity_scores_one(a):
    if len(a) >= 2:
        assert rouge_n(a, a, 2).f1 == 1.0
    if a:
        assert rouge_l(a, a).f1 == 1.0


def test_fragments_worked_example():
    frags = extractive_fragments("a b c d e".split(), "a b x d e".split())
    assert [f.tokens for f in frags] == [("a", "b"), ("d", "e")]
    assert coverage_density(frags, 5) == (0.8, 1.6)
    assert extractive_fragments(["a"], ["b"]) == []


def test_fragments_prefer_longest_then_earliest():
    source = "x y z x y".split()
    frags = extractive_fragments(source, "x y".split())
    assert frags[0].source_start == 0


def test_coverage_requires_tokens():
    with pytest.raises(ValueError):
        coverage_density([], 0)


@given(toks, toks)
def test_fragments_partition_generated(source, generated):
    frags = extractive_fragments(source, generated)
    last_end = 0
    for f in frags:
        assert f.gen_start >= last_end
        assert list(f.tokens) == generated[f.gen_start : f.gen_start + f.length]
        assert list(f.tokens) == source[f.source_start : f.source_start + f.length]
        last_end = f.gen_start + f.length


def test_extractiveness_row():
    row = extractiveness("abstract", "We propose a model.", "We propose a model.")
    assert (row.coverage, row.density, row.generated_tokens) == (1.0, 4.0, 4)


def test_kendall_examples():
    assert kendall_tau([1, 2, 3], [1, 3, 2]).tau == pytest.approx(1 / 3)
    assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]).tau == -1.0
    assert math.isnan(kendall_tau([1, 1, 1], [1, 2, 3]).tau)
    assert not kendall_tau([1, 1], [2, 3]).defined
    with pytest.raises(ValueError):
        kendall_tau([1], [1])
    with pytest.raises(ValueError):
        kendall_tau([1, 2], [1])


def test_style_distribution_percentages():
    labels = [
        StyleLabel(0, DiscourseRole.SINGLE_SUM, (CitationUsage.DOMINANT,)),
        StyleLabel(1, DiscourseRole.NARRATIVE, (CitationUsage.REFERENCE, CitationUsage.REFERENCE)),
        StyleLabel(2, DiscourseRole.SINGLE_SUM, ()),
        StyleLabel(3, DiscourseRole.TRANSITION, (CitationUsage.DOMINANT,)),
    ]
    dist = style_distribution(labels)
    assert dist.roles["Single-Sum"] == 50.0
    assert dist.citation_types["reference"] == 50.0
    assert (dist.sentences, dist.citations) == (4, 4)
    assert sum(dist.roles.values()) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        style_distribution([])


def test_usage_heuristic():
    bib = (BibEntry("b1", "T", "Luu", 2021), BibEntry("b2", "U", "Radford", 2019))
    sentence = "Luu et al. (2021) proposed a model trained on GPT-2 (Radford et al., 2019)."
    mentions = detect_citation_mentions(sentence, bib)
    usage = classify_citation_usage_heuristic(sentence, mentions)
    assert usage == [CitationUsage.DOMINANT, CitationUsage.REFERENCE]
    numeric = "[3] proposed X."
    assert classify_citation_usage_heuristic(numeric, detect_citation_mentions(numeric)) == [CitationUsage.DOMINANT]
