"""End-to-end orchestration: network, chunk plan, generation per variant,
CTS regeneration, lint and evaluation.

Everything written under the output directory is a pure function of the
inputs and the backend's answers, except the ``timings`` block of the
manifest and the timestamps inside cache entries.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .cache import FeatureCache
from .cts import CtsQuery, CtsSelection, augment_with_cts, extract_query_spans, retrieve_cts
from .graph import FeatureExtractor, build_network, resolve_bibliography
from .ingest import (
    BibEntry,
    PaperRecord,
    TaicBundle,
    detect_citation_mentions,
    extract_taic,
    read_corpus,
    read_paper_record,
)
from .llm import (
    BackendKind,
    BackendProfile,
    CallLog,
    LLMClient,
    Script,
    Transport,
    estimate_tokens,
    named_transform,
)
from .metrics import extractiveness, kendall_tau, rouge_l, rouge_n, tokenize_for_metrics
from .network import CitationNetwork, PaperMeta
from .prompts import (
    DEFAULT_FIELD,
    TEMPLATE_VERSION,
    VARIANT_IDS,
    ChunkItem,
    Feature,
    GenerationUnit,
    MainIdeaPlan,
    PromptBundle,
    assign_main_ideas,
    chronological,
    generation_overhead,
    parse_plan_text,
    plan_chunks,
    render_generation_prompt,
    render_paper_block,
    variant_features,
)

logger = logging.getLogger(__name__)

MAX_PARAGRAPHS = 3
CTS_HEADER = "\n\nPotentially useful sentences from this paper:\n"


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# Configuration


def _default_profile(model_id: str) -> dict[str, Any]:
    return {"kind": "scripted", "model_id": model_id}


@dataclass(frozen=True)
class RunConfig:
    target: Path
    cited: tuple[Path, ...]
    out: Path
    variants: tuple[str, ...] = VARIANT_IDS
    extraction: BackendProfile = BackendProfile(model_id="gpt-3.5-turbo")
    generation: BackendProfile = BackendProfile(model_id="gpt-4")
    budget: int = 8000
    k_cap: int = 10
    plan: Path | None = None
    gold: Path | None = None
    extra_citing: tuple[Path, ...] = ()
    expected_cited: tuple[str, ...] | None = None
    script: Path | None = None
    cache: Path | None = None
    field_name: str = DEFAULT_FIELD
    seed: int = 0
    scores: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.variants:
            raise ConfigError("at least one variant is required")
        unknown = [v for v in self.variants if v not in VARIANT_IDS]
        if unknown:
            raise ConfigError(f"unknown variants {unknown}; choose from {''.join(VARIANT_IDS)}")
        if self.budget <= 0:
            raise ConfigError("budget must be positive")
        if not 1 <= self.k_cap <= 10:
            raise ConfigError("k_cap must be within 1..10")
        needs_idea = [v for v in self.variants if variant_features(v).use_main_idea]
        if needs_idea and self.plan is None and self.gold is None:
            raise ConfigError(
                f"variants {needs_idea} use a main idea; provide a plan file or gold related-work text"
            )

    @property
    def cache_dir(self) -> Path:
        return self.cache if self.cache is not None else self.out / "cache"

    @property
    def digest(self) -> str:
        """Digest of the declarative settings; output and cache locations excluded."""
        settings = {k: v for k, v in self.raw.items() if k not in ("out", "cache")}
        settings["variants"] = list(self.variants)
        canonical = json.dumps(settings, sort_keys=True, ensure_ascii=False, default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], base: Path | str = ".") -> RunConfig:
        base = Path(base)

        def path(value: Any) -> Path | None:
            return None if value is None else base / str(value)

        try:
            cited_spec = data["cited"]
            target = path(data["target"])
        except KeyError as exc:
            raise ConfigError(f"config is missing {exc.args[0]!r}") from exc
        if isinstance(cited_spec, str) and (base / cited_spec).is_dir():
            cited = tuple(sorted((base / cited_spec).glob("*.json")))
        else:
            cited = tuple(base / str(p) for p in ([cited_spec] if isinstance(cited_spec, str) else cited_spec))
        profiles = data.get("profiles") or {}
        scores = data.get("scores")
        expected = data.get("expected_cited")
        try:
            return cls(
                target=target,
                cited=cited,
                out=path(data.get("out", "out")),
                variants=tuple(data.get("variants") or VARIANT_IDS),
                extraction=BackendProfile.from_dict(profiles.get("extraction") or _default_profile("gpt-3.5-turbo")),
                generation=BackendProfile.from_dict(profiles.get("generation") or _default_profile("gpt-4")),
                budget=int(data.get("budget", 8000)),
                k_cap=int(data.get("k_cap", 10)),
                plan=path(data.get("plan")),
                gold=path(data.get("gold")),
                extra_citing=tuple(base / str(p) for p in data.get("extra_citing") or ()),
                expected_cited=tuple(expected) if expected is not None else None,
                script=path(data.get("script")),
                cache=path(data.get("cache")),
                field_name=str(data.get("field", DEFAULT_FIELD)),
                seed=int(data.get("seed", 0)),
                scores=(tuple(scores["x"]), tuple(scores["y"])) if scores else None,
                raw=dict(data),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, *, out: str | Path | None = None) -> RunConfig:
        path = Path(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(data, Mapping):
            raise ConfigError(f"{path}: top level must be a mapping")
        config = cls.from_mapping(data, path.parent)
        return replace(config, out=Path(out)) if out is not None else config


# --------------------------------------------------------------------------
# Lint


@dataclass(frozen=True)
class LintReport:
    dropped: tuple[str, ...]
    style_inconsistent: bool
    styles: Mapping[str, int]
    mention_counts: Mapping[str, int]
    over_emphasized: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def clean(self) -> bool:
        return not (self.dropped or self.style_inconsistent or self.over_emphasized or self.warnings)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dropped": list(self.dropped),
            "style_inconsistent": self.style_inconsistent,
            "styles": dict(sorted(self.styles.items())),
            "mention_counts": dict(sorted(self.mention_counts.items())),
            "over_emphasized": list(self.over_emphasized),
            "warnings": list(self.warnings),
        }


def count_paragraphs(text: str) -> int:
    return sum(1 for p in text.split("\n\n") if p.strip())


def lint_generation(
    output: str,
    expected: Sequence[str],
    bibliography: Sequence[BibEntry],
    *,
    unit_texts: Sequence[str] = (),
) -> LintReport:
    """Report expected bib ids never cited, mixed marker styles, and outliers.

    A paper counts as over-emphasized when it is cited at least three times
    and more than twice the mean count across cited papers.
    """
    mentions = detect_citation_mentions(output, bibliography)
    counts = Counter(m.bib_id for m in mentions if m.bib_id is not None)
    styles = Counter(m.style.value for m in mentions)
    mean = sum(counts.values()) / len(counts) if counts else 0.0
    heavy = tuple(sorted(b for b, c in counts.items() if c >= 3 and c > 2 * mean))
    warnings = []
    unresolved = sorted({m.surface for m in mentions if m.bib_id is None})
    if unresolved:
        warnings.append(f"unresolved citation markers: {unresolved}")
    for i, text in enumerate(unit_texts):
        n = count_paragraphs(text)
        if n > MAX_PARAGRAPHS:
            warnings.append(f"unit {i} has {n} paragraphs (asked for at most {MAX_PARAGRAPHS})")
    return LintReport(
        dropped=tuple(sorted(set(expected) - set(counts))),
        style_inconsistent=len(styles) > 1,
        styles=dict(styles),
        mention_counts=dict(counts),
        over_emphasized=heavy,
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# Evaluation


def _finite(value: float) -> float | None:
    return value if math.isfinite(value) else None


def evaluate_run(
    outputs: Mapping[str, str],
    gold: str | None,
    features: Mapping[str, str],
    scores: tuple[Sequence[float], Sequence[float]] | None = None,
) -> dict[str, Any]:
    """ROUGE against gold, extractiveness against each feature text, optional tau."""
    report: dict[str, Any] = {"rouge": {}, "extractiveness": {}, "tau": None, "warnings": []}
    gold_tokens = tokenize_for_metrics(gold) if gold else None
    if gold_tokens is None:
        report["warnings"].append("no gold related work; ROUGE skipped")
        logger.warning("no gold related work; ROUGE skipped")
    for variant in sorted(outputs):
        tokens = tokenize_for_metrics(outputs[variant])
        if gold_tokens is not None:
            report["rouge"][variant] = {
                name: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
                for name, s in (
                    ("rouge1", rouge_n(tokens, gold_tokens, 1)),
                    ("rouge2", rouge_n(tokens, gold_tokens, 2)),
                    ("rougeL", rouge_l(tokens, gold_tokens)),
                )
            }
        if not tokens:
            report["warnings"].append(f"variant {variant} output is empty; extractiveness skipped")
            continue
        rows = {}
        for name in sorted(features):
            row = extractiveness(name, features[name], outputs[variant])
            rows[name] = {"coverage": row.coverage, "density": row.density}
        report["extractiveness"][variant] = rows
    if scores is not None:
        result = kendall_tau(*scores)
        report["tau"] = {
            "tau": _finite(result.tau),
            "n": result.n,
            "concordant": result.concordant,
            "discordant": result.discordant,
        }
    return report


def metrics_rows(report: Mapping[str, Any]) -> list[tuple[str, str, str, float | None]]:
    """Flatten a metrics report into ``(variant, metric, feature, value)`` rows."""
    rows = []
    for variant, scores in report["rouge"].items():
        for name, s in scores.items():
            rows.append((variant, f"{name}_f1", "gold", s["f1"]))
    for variant, features in report["extractiveness"].items():
        for name, row in features.items():
            rows.append((variant, "coverage", name, row["coverage"]))
            rows.append((variant, "density", name, row["density"]))
    if report["tau"] is not None:
        rows.append(("", "kendall_tau", "", report["tau"]["tau"]))
    return rows


# --------------------------------------------------------------------------
# Run state


def _sha(text: str | bytes) -> str:
    data = text.encode("utf-8") if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def _dump_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _make_script(config: RunConfig) -> Script:
    if config.script is not None:
        return Script.from_file(config.script)
    return Script(default=named_transform("structured"))


def make_clients(
    config: RunConfig, transport: Transport | None = None
) -> tuple[LLMClient, LLMClient]:
    """Extraction and generation clients, each with its own call log."""
    needs_script = BackendKind.SCRIPTED in (config.extraction.kind, config.generation.kind)
    script = _make_script(config) if needs_script else None
    generation = replace(config.generation, input_token_budget=config.budget)
    return (
        LLMClient(config.extraction, transport=transport, script=script),
        LLMClient(generation, transport=transport, script=script),
    )


@dataclass
class Workspace:
    """Inputs and derived features shared by every variant of a run."""

    config: RunConfig
    target: PaperRecord
    records: dict[str, PaperRecord]
    network: CitationNetwork
    taic: TaicBundle
    bib_of: dict[str, str]
    plan: MainIdeaPlan | None
    layout: list[tuple[str, list[str]]] | None
    gold_text: str | None
    warnings: list[str] = field(default_factory=list)

    @property
    def expected_bib_ids(self) -> list[str]:
        return sorted(self.bib_of[pid] for pid in self.network.cited_ids if pid in self.bib_of)


def _read_text(path: Path | None) -> str | None:
    return None if path is None else path.read_text(encoding="utf-8")


def prepare_workspace(config: RunConfig, extractor: FeatureExtractor) -> Workspace:
    target = read_paper_record(config.target)
    cited = read_corpus(config.cited)
    extra = read_corpus(config.extra_citing)
    expected = config.expected_cited
    if expected is None:
        expected = tuple(b.bib_id for b in target.bibliography)
    network = build_network(target, cited, extra, extractor=extractor, expected_cited=expected)
    records = {r.paper_id: r for r in [target, *cited, *extra]}

    links = resolve_bibliography(target, [PaperMeta.of(r) for r in records.values()])
    bib_of = {paper_id: bib_id for bib_id, paper_id in links.items()}
    for pid in network.cited_ids:
        if pid.startswith("bib:"):
            bib_of[pid] = pid[4:]
    paper_of = {bib: pid for pid, bib in bib_of.items()}

    warnings: list[str] = []
    gold_text = _read_text(config.gold)
    gold_units = parse_plan_text(gold_text) if gold_text else []
    layout = None
    if gold_units:
        layout = []
        for i, (label, body) in enumerate(gold_units):
            ids = []
            for mention in detect_citation_mentions(body, target.bibliography):
                pid = paper_of.get(mention.bib_id or "")
                if pid in network.cited_ids and pid not in ids:
                    ids.append(pid)
            layout.append((label or f"gold-{i + 1}", ids))

    plan = None
    if config.plan is not None:
        units = parse_plan_text(config.plan.read_text(encoding="utf-8"))
        if not units:
            raise ConfigError(f"plan file {config.plan} is empty")
        plan = MainIdeaPlan(tuple(b for _, b in units), "human-provided", tuple(l for l, _ in units))
    elif gold_units:
        summary = network.nodes[target.paper_id].summary
        ideas = extractor.map(lambda unit: extractor.main_idea(target.title, summary, unit[1]), gold_units)
        plan = MainIdeaPlan(tuple(ideas), "condensed-from-gold", tuple(l for l, _ in gold_units))

    return Workspace(
        config=config,
        target=target,
        records=records,
        network=network,
        taic=extract_taic(target),
        bib_of=bib_of,
        plan=plan,
        layout=layout,
        gold_text="\n\n".join(b for _, b in gold_units) if gold_units else None,
        warnings=warnings,
    )


def feature_texts(
    ws: Workspace, selections: Mapping[str, CtsSelection] | None = None
) -> dict[str, str]:
    """Every feature's text, whether or not a given variant used it."""
    net = ws.network
    cited = chronological(net.cited_ids, net.papers)
    nodes = [net.nodes[p] for p in cited]
    texts = {
        Feature.TAIC.value: "\n".join(
            [ws.taic.title, ws.taic.abstract, ws.taic.introduction, ws.taic.conclusion]
        ),
        Feature.FACETED.value: "\n".join(n.summary.render() for n in nodes if n.summary),
        Feature.ABSTRACT.value: "\n".join(net.papers[p].abstract for p in cited),
        Feature.USAGE.value: "\n".join(net.usages[p].text for p in cited if p in net.usages),
        Feature.RELATIONSHIP.value: "\n".join(
            e.relation_text for p in cited for e in net.incoming(p)
        ),
    }
    if ws.plan is not None:
        texts[Feature.MAIN_IDEA.value] = "\n".join(ws.plan.ideas)
    if selections:
        texts[Feature.CTS.value] = "\n".join(
            c.sentence for k in sorted(selections) for c in selections[k].chosen
        )
    return texts


# --------------------------------------------------------------------------
# Variant execution


@dataclass
class VariantResult:
    variant_id: str
    units: list[GenerationUnit]
    texts: list[str]
    prompts: list[dict[str, Any]]
    selections: dict[str, CtsSelection]
    warnings: list[str]

    @property
    def output(self) -> str:
        return "\n\n".join(t.strip() for t in self.texts) + "\n"


def _prompt_entry(bundle: PromptBundle, pass_name: str) -> dict[str, Any]:
    return {
        "variant": bundle.variant_id,
        "unit": bundle.unit_index,
        "pass": pass_name,
        "estimated_tokens": bundle.estimated_tokens,
        "user_digest": _sha(bundle.user),
        "features": sorted(f.value for f in bundle.features),
        "feature_digests": [
            {"feature": d.feature.value, "subject": d.subject, "digest": d.digest}
            for d in bundle.digests
        ],
    }


def plan_units(ws: Workspace, variant_id: str) -> tuple[list[GenerationUnit], list[str]]:
    spec = replace(variant_features(variant_id), use_cts=False)
    net = ws.network
    ordered = chronological(net.cited_ids, net.papers)
    items = [
        ChunkItem(pid, estimate_tokens(render_paper_block(spec, 99, pid, net)[0] + "\n\n"))
        for pid in ordered
    ]
    ideas = ws.plan.ideas if (spec.use_main_idea and ws.plan) else ()
    overhead = generation_overhead(spec, ws.taic, ideas, ws.config.field_name)
    units = plan_chunks(items, ws.layout, ws.config.budget, overhead)
    warnings = []
    if spec.use_main_idea:
        units, warnings = assign_main_ideas(units, ws.plan)
    return units, warnings


def _cts_selections(
    ws: Workspace, unit: GenerationUnit, draft: str, draft_tokens: int
) -> tuple[dict[str, CtsSelection], list[str]]:
    warnings = []
    queries = extract_query_spans(draft, ws.target.bibliography)
    eligible = [pid for pid in unit.cited_ids if pid in ws.records and pid in ws.bib_of]
    if not eligible:
        return {}, warnings
    share = (ws.config.budget - draft_tokens) // len(eligible) - estimate_tokens(CTS_HEADER)
    selections = {}
    for pid in eligible:
        spans = queries.get(ws.bib_of[pid], [])
        if not spans:
            warnings.append(f"draft for unit {unit.unit_index} never cites {pid}; no CTS retrieved")
            continue
        if share <= 0:
            warnings.append(f"no budget left for CTS of {pid} in unit {unit.unit_index}")
            continue
        query = CtsQuery(pid, " ".join(spans), ws.config.k_cap, share)
        selection = retrieve_cts(query, ws.records[pid])
        if selection.chosen:
            selections[pid] = selection
    return selections, warnings


def run_variant(ws: Workspace, variant_id: str, client: LLMClient) -> VariantResult:
    spec = variant_features(variant_id)
    draft_spec = replace(spec, use_cts=False)
    units, warnings = plan_units(ws, variant_id)
    budget = ws.config.budget
    field_name = ws.config.field_name
    texts, prompts = [], []
    selections: dict[str, CtsSelection] = {}
    for unit in units:
        bundle = render_generation_prompt(
            draft_spec, ws.taic, unit, ws.network, budget=budget, field_name=field_name
        )
        prompts.append(_prompt_entry(bundle, "draft"))
        tags = {"stage": "generation", "variant": variant_id, "unit": unit.unit_index}
        text = client.complete(client.request(bundle.user), **tags, **{"pass": "draft"}).content
        if spec.use_cts:
            chosen, notes = _cts_selections(ws, unit, text, bundle.estimated_tokens)
            warnings.extend(notes)
            selections.update(chosen)
            bundle = augment_with_cts(
                ws.taic, unit, ws.network, chosen, budget=budget, field_name=field_name
            )
            prompts.append(_prompt_entry(bundle, "cts"))
            text = client.complete(client.request(bundle.user), **tags, **{"pass": "cts"}).content
        n = count_paragraphs(text)
        if n > MAX_PARAGRAPHS:
            warnings.append(f"variant {variant_id} unit {unit.unit_index}: {n} paragraphs")
            logger.warning("variant %s unit %d has %d paragraphs", variant_id, unit.unit_index, n)
        texts.append(text)
    return VariantResult(variant_id, units, texts, prompts, selections, warnings)


# --------------------------------------------------------------------------
# Whole run


def _call_entries(*logs: CallLog) -> tuple[list[dict[str, Any]], float]:
    entries, latency = [], 0.0
    for record in (r for log in logs for r in log.records):
        entry = record.to_dict()
        latency += entry.pop("latency_s")
        entries.append(entry)
    entries.sort(key=lambda e: json.dumps([e["tags"], e["digest"]], sort_keys=True))
    return entries, latency


def _write_metrics(out: Path, report: Mapping[str, Any]) -> None:
    _dump_json(out / "metrics.json", report)
    with (out / "metrics.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "metric", "feature", "value"])
        for row in metrics_rows(report):
            writer.writerow(["" if v is None else v for v in row])


def run_pipeline(
    config: RunConfig,
    *,
    variants: Sequence[str] | None = None,
    transport: Transport | None = None,
) -> dict[str, Any]:
    """Run every requested variant and write all artifacts; returns the manifest."""
    variants = tuple(variants) if variants is not None else config.variants
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    extract_client, gen_client = make_clients(config, transport)
    cache = FeatureCache(config.cache_dir)
    extractor = FeatureExtractor(
        extract_client, cache, template_version=TEMPLATE_VERSION,
        max_in_flight=config.extraction.max_in_flight,
    )

    started = time.perf_counter()
    ws = prepare_workspace(config, extractor)
    (out / "network.json").write_text(ws.network.dumps(), encoding="utf-8")
    timings["features"] = time.perf_counter() - started

    results: dict[str, VariantResult] = {}
    errors: dict[str, str] = {}
    for vid in variants:
        started = time.perf_counter()
        try:
            results[vid] = run_variant(ws, vid, gen_client)
        except Exception as exc:  # recorded; the remaining variants still run
            logger.error("variant %s failed: %s", vid, exc)
            errors[vid] = f"{type(exc).__name__}: {exc}"
        timings[f"variant:{vid}"] = time.perf_counter() - started

    selections: dict[str, CtsSelection] = {}
    for vid, result in results.items():
        (out / f"{vid}.txt").write_text(result.output, encoding="utf-8")
        selections.update(result.selections)
    for selection in selections.values():
        selection.write(out / "cts")

    lint = {
        vid: lint_generation(
            r.output, ws.expected_bib_ids, ws.target.bibliography, unit_texts=r.texts
        ).to_dict()
        for vid, r in results.items()
    }
    _dump_json(out / "lint.json", lint)

    started = time.perf_counter()
    report = evaluate_run(
        {vid: r.output for vid, r in results.items()},
        ws.gold_text,
        feature_texts(ws, selections),
        config.scores,
    )
    _write_metrics(out, report)
    timings["evaluate"] = time.perf_counter() - started

    calls, latency = _call_entries(extract_client.log, gen_client.log)
    remote_calls = sum(
        len(c.log.records) for c in (extract_client, gen_client) if c.profile.kind is BackendKind.REMOTE
    )
    timings["backend_latency"] = latency
    artifacts = sorted(
        p for p in out.rglob("*") if p.is_file() and "cache" not in p.relative_to(out).parts[:1]
    )
    manifest = {
        "config_digest": config.digest,
        "template_versions": {"prompts": TEMPLATE_VERSION},
        "profiles": {
            "extraction": config.extraction.model_id,
            "generation": config.generation.model_id,
        },
        "variants": {
            vid: {
                "status": "ok" if vid in results else "error",
                "error": errors.get(vid),
                "units": [
                    {
                        "index": u.unit_index,
                        "label": u.gold_layout_label,
                        "source": u.source,
                        "cited_ids": list(u.cited_ids),
                    }
                    for u in (results[vid].units if vid in results else [])
                ],
                "warnings": results[vid].warnings if vid in results else [],
            }
            for vid in variants
        },
        "main_idea_source": ws.plan.source if ws.plan else None,
        "chunking": "gold-layout" if ws.layout else "greedy",
        "prompts": [p for vid in variants if vid in results for p in results[vid].prompts],
        "calls": calls,
        "call_count": len(calls),
        "remote_calls": remote_calls,
        "cache": {"hits": cache.hits, "misses": cache.misses},
        "outputs": {
            str(p.relative_to(out)): _sha(p.read_bytes())
            for p in artifacts
            if p.name != "manifest.json"
        },
        "warnings": ws.warnings,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    _dump_json(out / "manifest.json", manifest)
    return manifest


def lint_outputs(config: RunConfig, ws: Workspace) -> dict[str, Any]:
    report = {}
    for vid in config.variants:
        path = config.out / f"{vid}.txt"
        if path.exists():
            text = path.read_text(encoding="utf-8")
            report[vid] = lint_generation(text, ws.expected_bib_ids, ws.target.bibliography).to_dict()
    return report


def load_selections(out: Path) -> dict[str, CtsSelection]:
    from .cts import CtsCandidate

    selections = {}
    for path in sorted((out / "cts").glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        chosen = tuple(
            CtsCandidate(c["sentence"], c["heading"], c["position"], c["score"]) for c in data["chosen"]
        )
        selections[data["cited_id"]] = CtsSelection(data["cited_id"], chosen)
    return selections


def read_outputs(config: RunConfig) -> dict[str, str]:
    return {
        vid: (config.out / f"{vid}.txt").read_text(encoding="utf-8")
        for vid in config.variants
        if (config.out / f"{vid}.txt").exists()
    }
