"""Related-work generation from a local citation network, with offline
evaluation tooling (ROUGE, extractiveness, Kendall's tau, citation lint)."""

from .cts import CtsQuery, CtsSelection, retrieve_cts, score_candidate
from .graph import FeatureExtractor, build_network
from .ingest import PaperRecord, detect_citation_mentions, extract_taic, load_paper_record
from .llm import BackendProfile, ChatRequest, LLMClient
from .metrics import extractive_fragments, kendall_tau, rouge_l, rouge_n
from .pipeline import RunConfig, evaluate_run, lint_generation, run_pipeline
from .prompts import variant_features

__version__ = "0.1.0"

__all__ = [
    "BackendProfile",
    "ChatRequest",
    "CtsQuery",
    "CtsSelection",
    "FeatureExtractor",
    "LLMClient",
    "PaperRecord",
    "RunConfig",
    "build_network",
    "detect_citation_mentions",
    "evaluate_run",
    "extract_taic",
    "extractive_fragments",
    "kendall_tau",
    "lint_generation",
    "load_paper_record",
    "retrieve_cts",
    "rouge_l",
    "rouge_n",
    "run_pipeline",
    "score_candidate",
    "variant_features",
]
