from __future__ import annotations

import json
from pathlib import Path

import pytest

from litreview.cache import FeatureCache
from litreview.graph import FeatureExtractor, build_network
from litreview.ingest import read_corpus, read_paper_record
from litreview.llm import BackendProfile, LLMClient, Script, named_transform

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

# Filled by tests/test_acceptance.py; printed once at the end of the session.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def load_fixture(name: str):
    return read_paper_record(FIXTURES / name)


@pytest.fixture
def target():
    return load_fixture("target_paper.json")


@pytest.fixture
def cited():
    return read_corpus(sorted((FIXTURES / "cited").glob("*.json")))


@pytest.fixture
def extra():
    return [load_fixture("extra_citing.json")]


def scripted_client(model_id: str = "extract-model", **profile) -> LLMClient:
    script = Script(default=named_transform("structured"))
    return LLMClient(BackendProfile(model_id=model_id, **profile), script=script)


@pytest.fixture
def extractor(tmp_path):
    return FeatureExtractor(scripted_client(), FeatureCache(tmp_path / "cache"), max_in_flight=1)


@pytest.fixture
def network(target, cited, extra, extractor):
    bib_ids = [b.bib_id for b in target.bibliography]
    return build_network(target, cited, extra, extractor=extractor, expected_cited=bib_ids)


def read_json(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
