import pytest
from hypothesis import given
from hypothesis import strategies as st

from litreview.cache import text_digest
from litreview.ingest import TaicBundle
from litreview.network import NodeMode
from litreview.prompts import (
    VARIANT_IDS,
    ChunkingError,
    ChunkItem,
    Feature,
    GenerationUnit,
    MainIdeaPlan,
    MissingFeatureError,
    PromptBudgetError,
    PromptError,
    assign_main_ideas,
    chronological,
    parse_plan_text,
    plan_chunks,
    render_faceted_prompt,
    render_generation_prompt,
    render_main_idea_prompt,
    variant_features,
)
from test_acceptance import MINI_TAIC, SUMMARY_T, mini_generation_prompt, mini_network


def test_variant_specs():
    assert variant_features("D").node_mode is NodeMode.ABSTRACT
    assert not variant_features("G").use_usage and not variant_features("G").use_relationship
    assert variant_features("H").use_cts and not variant_features("A").use_cts
    with pytest.raises(ValueError):
        variant_features("Z")


@pytest.mark.parametrize("variant", VARIANT_IDS)
def test_digests_match_rendered_content(variant):
    bundle = mini_generation_prompt(variant)
    network = mini_network()
    for d in bundle.digests:
        if d.feature is Feature.FACETED:
            assert d.digest == text_digest(network.nodes[d.subject].summary.render())
        elif d.feature is Feature.ABSTRACT:
            assert d.digest == text_digest(network.papers[d.subject].abstract)
        elif d.feature is Feature.USAGE:
            assert d.digest == text_digest(network.usages[d.subject].text)
    assert ("Pay extra attention to <Usage>" in bundle.user) == variant_features(variant).use_usage
    assert ("Title: " in bundle.user) == variant_features(variant).use_taic


def test_header_variants_differ_only_where_ablated():
    a, b, c = (mini_generation_prompt(v).user for v in "ABC")
    assert "Main idea of our related work section" not in b and "reorder" not in b
    assert "in a natural way." in b
    assert "We have finished writing" not in c and "does not conflict" not in c


def test_papers_listed_chronologically():
    user = mini_generation_prompt("A").user
    assert user.index("1. Attention Is All You Need") < user.index("2. BERT")


def test_missing_features_raise():
    network = mini_network()
    network.usages.pop("devlin")
    unit = GenerationUnit(0, ("devlin",), "x", main_idea="m")
    with pytest.raises(MissingFeatureError, match="intent/usage"):
        render_generation_prompt(variant_features("A"), MINI_TAIC, unit, network)
    render_generation_prompt(variant_features("E"), MINI_TAIC, unit, network)
    with pytest.raises(MissingFeatureError, match="main idea"):
        render_generation_prompt(variant_features("E"), MINI_TAIC, GenerationUnit(0, ("devlin",), "x"), network)


def test_budget_error_suggests_rechunking():
    with pytest.raises(PromptBudgetError, match="re-chunk"):
        render_generation_prompt(
            variant_features("A"), MINI_TAIC,
            GenerationUnit(0, ("devlin", "vaswani"), "x", main_idea="m"), mini_network(), budget=50,
        )


def test_empty_inputs_rejected():
    with pytest.raises(PromptError):
        render_faceted_prompt(TaicBundle("T", " ", "", ""))
    with pytest.raises(PromptError, match="plan"):
        render_main_idea_prompt("T", SUMMARY_T, "")


def test_assign_main_ideas_reuses_last():
    units = [GenerationUnit(i, ("p",), "x") for i in range(3)]
    assigned, warnings = assign_main_ideas(units, MainIdeaPlan(("one", "two"), "human-provided"))
    assert [u.main_idea for u in assigned] == ["one", "two", "two"]
    assert warnings
    with pytest.raises(PromptError):
        assign_main_ideas(units, MainIdeaPlan((), "human-provided"))


def test_chronological_tie_break():
    net = mini_network()
    from litreview.network import PaperMeta

    papers = {
        "x": PaperMeta("x", "X", "Zed", 2020),
        "y": PaperMeta("y", "Y", "adams", 2020),
        "z": PaperMeta("z", "Z", "Mid", None),
        **net.papers,
    }
    assert chronological(["z", "x", "y", "devlin"], papers) == ["devlin", "y", "x", "z"]


def test_parse_plan_text():
    text = "# First\nidea one\n---\n\nidea two\nline two\n---\n"
    assert parse_plan_text(text) == [("First", "idea one"), (None, "idea two\nline two")]


sizes = st.lists(st.integers(1, 40), min_size=1, max_size=25)


@given(sizes, st.integers(41, 200), st.integers(0, 30))
def test_greedy_chunks_partition_in_order(token_sizes, budget, overhead):
    items = [ChunkItem(f"p{i}", t) for i, t in enumerate(token_sizes)]
    if max(token_sizes) > budget - overhead:
        with pytest.raises(ChunkingError):
            plan_chunks(items, None, budget, overhead)
        return
    units = plan_chunks(items, None, budget, overhead)
    flat = [pid for u in units for pid in u.cited_ids]
    assert flat == [i.paper_id for i in items]
    assert all(u.estimated_tokens <= budget for u in units)
    assert [u.unit_index for u in units] == list(range(len(units)))
    if sum(token_sizes) + overhead <= budget:
        assert len(units) == 1 and units[0].gold_layout_label == "full"
    else:
        # greedy: no unit could have absorbed the next unit's first paper
        for left, right in zip(units, units[1:]):
            first = next(i for i in items if i.paper_id == right.cited_ids[0])
            assert left.estimated_tokens + first.tokens > budget


def test_gold_layout_chunks():
    items = [ChunkItem(p, 30) for p in "abcde"]
    units = plan_chunks(items, [("one", ["a", "b"]), ("two", ["c", "d"])], 100, 10)
    assert [u.cited_ids for u in units] == [("a", "b"), ("c", "d"), ("e",)]
    assert [u.gold_layout_label for u in units] == ["one", "two", "unassigned"]
    with pytest.raises(ChunkingError, match="unknown"):
        plan_chunks(items, [("one", ["q"])], 100, 10)
    with pytest.raises(ChunkingError):
        plan_chunks(items, [("all", list("abcde"))], 100, 10)
    with pytest.raises(ChunkingError):
        plan_chunks(items, None, 10, 10)
