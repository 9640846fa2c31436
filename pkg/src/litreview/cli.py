"""Command-line entry point: ``litreview {features,generate,evaluate,lint}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence

from .cache import FeatureCache
from .graph import FeatureExtractor
from .llm import BackendError
from .pipeline import (
    ConfigError,
    RunConfig,
    Workspace,
    _dump_json,
    _write_metrics,
    evaluate_run,
    feature_texts,
    lint_outputs,
    load_selections,
    make_clients,
    prepare_workspace,
    read_outputs,
    run_pipeline,
)
from .prompts import TEMPLATE_VERSION, VARIANT_IDS

logger = logging.getLogger("litreview")


def _workspace(config: RunConfig) -> tuple[Workspace, FeatureCache]:
    extract_client, _ = make_clients(config)
    cache = FeatureCache(config.cache_dir)
    extractor = FeatureExtractor(
        extract_client, cache, template_version=TEMPLATE_VERSION,
        max_in_flight=config.extraction.max_in_flight,
    )
    return prepare_workspace(config, extractor), cache


def cmd_features(config: RunConfig, args: argparse.Namespace) -> int:
    ws, cache = _workspace(config)
    config.out.mkdir(parents=True, exist_ok=True)
    (config.out / "network.json").write_text(ws.network.dumps(), encoding="utf-8")
    print(
        f"network: {len(ws.network.nodes)} nodes, {len(ws.network.edges)} edges, "
        f"{len(ws.network.usages)} usages (cache hits {cache.hits}, misses {cache.misses})"
    )
    return 0


def cmd_generate(config: RunConfig, args: argparse.Namespace) -> int:
    manifest = run_pipeline(config, variants=args.variant or None)
    failed = [v for v, info in manifest["variants"].items() if info["status"] != "ok"]
    for vid, info in manifest["variants"].items():
        print(f"{vid}: {info['status']}" + (f" ({info['error']})" if info["error"] else ""))
    return 1 if failed else 0


def cmd_evaluate(config: RunConfig, args: argparse.Namespace) -> int:
    ws, _ = _workspace(config)
    outputs = read_outputs(config)
    if not outputs:
        print(f"no outputs under {config.out}; run 'generate' first", file=sys.stderr)
        return 1
    report = evaluate_run(
        outputs, ws.gold_text, feature_texts(ws, load_selections(config.out)), config.scores
    )
    _write_metrics(config.out, report)
    print(json.dumps(report["rouge"], indent=2, sort_keys=True))
    return 0


def cmd_lint(config: RunConfig, args: argparse.Namespace) -> int:
    ws, _ = _workspace(config)
    report = lint_outputs(config, ws)
    _dump_json(config.out / "lint.json", report)
    for vid, entry in sorted(report.items()):
        print(f"{vid}: dropped={entry['dropped']} mixed_styles={entry['style_inconsistent']}")
    return 0


COMMANDS = {
    "features": cmd_features,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "lint": cmd_lint,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litreview", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "features": "build the citation network and warm the feature cache",
        "generate": "generate related-work text for one or more variants",
        "evaluate": "score existing outputs (ROUGE, extractiveness, tau)",
        "lint": "check outputs for dropped citations and mixed marker styles",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="YAML run configuration")
        cmd.add_argument("--out", help="output directory (overrides the config)")
        if name == "generate":
            cmd.add_argument(
                "--variant", action="append", choices=VARIANT_IDS,
                help="variant to run; repeat for several (default: those in the config)",
            )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = RunConfig.from_file(args.config, out=args.out)
        return COMMANDS[args.command](config, args)
    except (ConfigError, BackendError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
