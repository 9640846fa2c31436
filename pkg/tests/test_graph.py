import pytest

from conftest import scripted_client
from litreview.cache import FeatureCache
from litreview.graph import (
    FeatureExtractionError,
    FeatureExtractor,
    NetworkError,
    build_network,
    resolve_bibliography,
)
from litreview.ingest import extract_citation_spans
from litreview.llm import BackendKind, BackendProfile, LLMClient
from litreview.network import NodeMode, PaperMeta


def test_network_shape(network):
    assert network.target_id == "target"
    assert set(network.cited_ids) == {"vaswani", "devlin", "liu", "lewis", "xing", "bib:b6"}
    pairs = {(e.from_id, e.to_id) for e in network.edges}
    assert ("devlin", "vaswani") in pairs and ("chen", "xing") in pairs
    assert ("target", "bib:b6") not in pairs
    assert network.nodes["bib:b6"].mode is NodeMode.TITLE_ONLY
    assert network.papers["bib:b6"].degraded
    for pid in ("vaswani", "devlin", "liu", "lewis", "xing"):
        assert pid in network.usages
    assert "chen" not in network.usages


def test_edges_carry_host_spans(network):
    for edge in network.edges:
        assert edge.supporting_spans
        assert all(s.host_paper_id == edge.from_id for s in edge.supporting_spans)


def test_rerun_is_served_from_cache(target, cited, extra, tmp_path):
    cache = FeatureCache(tmp_path / "c")
    first = FeatureExtractor(scripted_client(), cache, max_in_flight=4)
    net1 = build_network(target, cited, extra, extractor=first)
    second = FeatureExtractor(scripted_client(), FeatureCache(tmp_path / "c"))
    net2 = build_network(target, cited, extra, extractor=second)
    assert net1.dumps() == net2.dumps()
    assert first.client.log.records and not second.client.log.records


def test_resolve_bibliography_by_title_then_author(target, cited):
    metas = [PaperMeta.of(r) for r in cited]
    links = resolve_bibliography(target, metas)
    assert links == {"b1": "vaswani", "b2": "devlin", "b3": "liu", "b4": "lewis", "b5": "xing"}
    renamed = [PaperMeta(m.paper_id, "Different title", m.lead_author, m.year) for m in metas]
    assert resolve_bibliography(target, renamed)["b2"] == "devlin"


def test_preconditions(cited, extractor):
    devlin = next(r for r in cited if r.paper_id == "devlin")
    vaswani = next(r for r in cited if r.paper_id == "vaswani")
    a, b = PaperMeta.of(devlin), PaperMeta.of(vaswani)
    s = extractor.faceted_summary(devlin)
    with pytest.raises(NetworkError):
        extractor.edge_relation(a, s, b, s, [])
    spans = extract_citation_spans(devlin, "b1")
    with pytest.raises(NetworkError, match="hosted"):
        extractor.edge_relation(b, s, a, s, spans)
    with pytest.raises(NetworkError):
        extractor.enriched_usage(b, [])
    with pytest.raises(NetworkError):
        build_network(devlin, [], extractor=extractor)


def test_backend_failure_names_cache_key(cited, tmp_path):
    profile = BackendProfile(kind=BackendKind.REMOTE, model_id="m", endpoint="http://x")
    client = LLMClient(profile, transport=lambda url, headers, payload: (400, {"error": "bad"}))
    extractor = FeatureExtractor(client, FeatureCache(tmp_path))
    with pytest.raises(FeatureExtractionError) as info:
        extractor.faceted_summary(cited[0])
    assert info.value.key.operation == "faceted_summary"
    assert info.value.key.digest[:16] in str(info.value)
