"""Command-line entry points: validate, compose, run, score, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .composer import GridLayout, compose_grid, default_layout
from .dataset import load_dataset, validate
from .errors import ConfigError, HarnessError
from .metrics import AbstentionPolicy
from .prompts import StrategyKind
from .provider import ChatProvider, ProviderConfig, mock_provider
from .runner import RunConfig, run_experiment, score_manifest, write_summary_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icl-xray",
        description="Few-shot prompting harness for vision chat models"
                    " on two-class image datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a dataset directory tree")
    p_validate.add_argument("root", type=Path)

    p_compose = sub.add_parser("compose", help="tile image files into one grid figure")
    p_compose.add_argument("files", nargs="+", type=Path)
    p_compose.add_argument("--out", type=Path, required=True)
    p_compose.add_argument("--rows", type=int, default=None)
    p_compose.add_argument("--cols", type=int, default=None)

    p_run = sub.add_parser("run", help="execute one experiment run")
    p_run.add_argument("--dataset", type=Path, required=True)
    p_run.add_argument("--strategy", required=True,
                       choices=[k.value for k in StrategyKind])
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--provider-config", type=Path, default=None)
    p_run.add_argument("--shots", type=int, default=None,
                       help="override shots per class")
    p_run.add_argument("--limit", type=int, default=None,
                       help="cap the number of test items (smoke runs)")
    p_run.add_argument("--out", type=Path, required=True)
    p_run.add_argument("--resample-per-request", action="store_true")
    p_run.add_argument("--mock-script", type=Path, default=None,
                       help="JSONL of scripted responses; runs offline")
    p_run.add_argument("--reasoning", default=None,
                       help="explanation text for the reasoning strategies")
    p_run.add_argument("--positive-class", default=None)
    p_run.add_argument("--abstention-policy", default="count_as_error",
                       choices=[p.value for p in AbstentionPolicy])

    p_score = sub.add_parser("score", help="re-score a run manifest offline")
    p_score.add_argument("manifest", type=Path)
    p_score.add_argument("--synonyms-file", type=Path, default=None,
                         help="JSON alias->class table overriding the run's")

    p_report = sub.add_parser("report", help="aggregate manifests into a summary CSV")
    p_report.add_argument("manifests", nargs="+", type=Path)
    p_report.add_argument("--out", type=Path, required=True)

    return parser


def _load_mock_script(path: Path) -> list:
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        value = json.loads(line)
        if not isinstance(value, (str, int)):
            raise ConfigError(f"mock script entries must be strings or status"
                              f" codes, got {type(value).__name__}")
        entries.append(value)
    if not entries:
        raise ConfigError(f"mock script {path} is empty")
    return entries


def _cmd_validate(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.root)
    print(validate(dataset).to_text())
    return 0


def _cmd_compose(args: argparse.Namespace) -> int:
    if (args.rows is None) != (args.cols is None):
        raise ConfigError("give both --rows and --cols or neither")
    if args.rows is not None:
        layout = GridLayout(rows=args.rows, cols=args.cols)
    else:
        layout = default_layout(len(args.files))
    figure = compose_grid(args.files, layout)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(figure.to_png_bytes())
    print(f"wrote {args.out} ({layout.rows}x{layout.cols},"
          f" {len(figure.placements)} images)")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    provider_config = (ProviderConfig.from_json(args.provider_config)
                       if args.provider_config else ProviderConfig())
    config = RunConfig(
        dataset_root=args.dataset,
        strategy=StrategyKind(args.strategy),
        seed=args.seed,
        out_dir=args.out,
        shots_per_class=args.shots,
        resample_per_request=args.resample_per_request,
        provider=provider_config,
        abstention_policy=AbstentionPolicy(args.abstention_policy),
        positive_class=args.positive_class,
        reasoning_text=args.reasoning,
        limit=args.limit,
    )
    provider: ChatProvider | None = None
    if args.mock_script is not None:
        provider = mock_provider(_load_mock_script(args.mock_script),
                                 config=provider_config)
    manifest = run_experiment(config, provider=provider)
    print(f"manifest: {manifest.path}")
    print(manifest.metrics.to_text())
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    synonyms = None
    if args.synonyms_file is not None:
        synonyms = json.loads(args.synonyms_file.read_text(encoding="utf-8"))
    result = score_manifest(args.manifest, synonyms=synonyms)
    print("recomputed:")
    print(result.recomputed.to_text())
    if result.embedded is not None:
        print(f"matches embedded report: {'yes' if result.matches_embedded else 'no'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    out = write_summary_csv(args.manifests, args.out)
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "compose": _cmd_compose,
    "run": _cmd_run,
    "score": _cmd_score,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HarnessError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
