"""End-to-end experiment orchestration with a re-scorable run manifest.

A run plans one request per test item group, composes figures, renders
prompts, calls the provider, parses responses and scores the predictions.
Every request is appended to a line-delimited JSON manifest as soon as it
completes, so interrupted runs resume without re-sending anything, and the
manifest alone is enough to re-score the run offline.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .composer import ComposedFigure, compose_grid, default_layout
from .dataset import (ClassLabel, Dataset, LabeledImage, load_dataset,
                      stratified_sample, validate)
from .errors import (ConfigError, ManifestIntegrityError, PlanningError,
                     TransportError)
from .metrics import AbstentionPolicy, MetricsReport, score_predictions
from .parser import ParseStatus, Prediction, parse_labels
from .prompts import (DEFAULT_REASONING, DEFAULT_REASONING_NOTE,
                      ICL3_DEVIATION_NOTE, ICL_R2_DEVIATION_NOTE,
                      PromptPackage, Strategy, StrategyKind, render_prompt,
                      template_digests)
from .provider import ChatProvider, ModelResponse, ProviderConfig

MANIFEST_VERSION = 1

# keys holding wall-clock data; dropped when comparing manifests for identity
VOLATILE_KEYS = frozenset({"timestamp", "latency_ms", "timing"})


@dataclass(frozen=True)
class RunConfig:
    dataset_root: Path
    strategy: StrategyKind
    seed: int
    out_dir: Path
    shots_per_class: int | None = None
    resample_per_request: bool = False
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    abstention_policy: AbstentionPolicy = AbstentionPolicy.COUNT_AS_ERROR
    positive_class: str | None = None
    class_order: tuple[str, str] | None = None
    synonyms: Mapping[str, str] | None = None
    reasoning_text: str | None = None
    limit: int | None = None
    concurrency: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "dataset_root", Path(self.dataset_root))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "strategy", StrategyKind(self.strategy))
        object.__setattr__(self, "abstention_policy",
                           AbstentionPolicy(self.abstention_policy))
        if self.limit is not None and self.limit < 1:
            raise ConfigError("limit must be positive when given")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / f"{self.strategy.value}-seed{self.seed}.jsonl"

    def build_strategy(self) -> Strategy:
        reasoning = None
        if self.strategy in (StrategyKind.ICL_R1, StrategyKind.ICL_R2):
            reasoning = self.reasoning_text or DEFAULT_REASONING
        return Strategy.of(self.strategy, reasoning_text=reasoning,
                           shots_per_class=self.shots_per_class)

    def snapshot(self) -> dict:
        """Experiment-defining fields only; local output paths excluded."""
        return {
            "dataset_root": str(self.dataset_root),
            "strategy": self.strategy.value,
            "seed": self.seed,
            "shots_per_class": self.shots_per_class,
            "resample_per_request": self.resample_per_request,
            "provider": self.provider.to_record(),
            "abstention_policy": self.abstention_policy.value,
            "positive_class": self.positive_class,
            "class_order": list(self.class_order) if self.class_order else None,
            "synonyms": dict(self.synonyms) if self.synonyms else None,
            "reasoning_text": self.reasoning_text,
            "limit": self.limit,
        }

    def digest(self) -> str:
        canon = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RequestPlan:
    plan_index: int
    example_ids: tuple[str, ...]
    query_ids: tuple[str, ...]


@dataclass
class RunManifest:
    path: Path
    header: dict
    requests: list[dict]
    summary: dict
    metrics: MetricsReport


@dataclass(frozen=True)
class RescoreResult:
    recomputed: MetricsReport
    embedded: dict | None
    matches_embedded: bool
    parsed_count: int


def _child_seed(seed: int, plan_index: int) -> int:
    """Stable 64-bit per-plan seed (not salted; identical across processes)."""
    mask = (1 << 64) - 1
    x = (seed ^ ((plan_index + 1) * 0x9E3779B97F4A7C15)) & mask
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & mask
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & mask
    return x ^ (x >> 31)


def plan_requests(config: RunConfig, dataset: Dataset) -> list[RequestPlan]:
    """Deterministic request plans covering every test item exactly once."""
    strategy = config.build_strategy()
    test_items = sorted(dataset.split_items("test"), key=lambda item: item.id)
    if config.limit is not None:
        test_items = test_items[:config.limit]
    if not test_items:
        raise PlanningError("test split is empty; nothing to plan")

    k = strategy.shots_per_class
    group_size = strategy.queries_per_request
    groups = [test_items[i:i + group_size]
              for i in range(0, len(test_items), group_size)]

    fixed_shot_ids: tuple[str, ...] = ()
    if not config.resample_per_request:
        fixed_shot_ids = tuple(
            item.id for item in stratified_sample(dataset, "train", k, config.seed))

    plans: list[RequestPlan] = []
    for plan_index, group in enumerate(groups):
        if config.resample_per_request:
            shots = stratified_sample(dataset, "train", k,
                                      _child_seed(config.seed, plan_index))
            example_ids = tuple(item.id for item in shots)
        else:
            example_ids = fixed_shot_ids
        plans.append(RequestPlan(
            plan_index=plan_index,
            example_ids=example_ids,
            query_ids=tuple(item.id for item in group),
        ))
    return plans


def build_figures(strategy: Strategy, examples: Sequence[LabeledImage],
                  queries: Sequence[LabeledImage]) -> list[ComposedFigure] | None:
    if not strategy.combine_into_figure:
        return None
    if strategy.kind is StrategyKind.ICL3:
        per_group = len(examples) + 1
        return [compose_grid(list(examples) + [query], default_layout(per_group))
                for query in queries]
    total = len(examples) + len(queries)
    return [compose_grid(list(examples) + list(queries), default_layout(total))]


def _strategy_deviation_notes(config: RunConfig) -> list[str]:
    notes: list[str] = []
    if config.strategy is StrategyKind.ICL3:
        notes.append(ICL3_DEVIATION_NOTE)
    if config.strategy is StrategyKind.ICL_R2:
        notes.append(ICL_R2_DEVIATION_NOTE)
    if (config.strategy in (StrategyKind.ICL_R1, StrategyKind.ICL_R2)
            and not config.reasoning_text):
        notes.append(DEFAULT_REASONING_NOTE)
    return notes


def run_experiment(config: RunConfig,
                   provider: ChatProvider | None = None,
                   dataset: Dataset | None = None) -> RunManifest:
    """Execute (or resume) a run and return the completed manifest."""
    if dataset is None:
        dataset = load_dataset(config.dataset_root, class_order=config.class_order)
    if provider is None:
        provider = ChatProvider(config.provider)
    strategy = config.build_strategy()
    task = dataset.task
    plans = plan_requests(config, dataset)

    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.manifest_path
    header, existing, summary = (None, [], None)
    if path.exists():
        header, existing, summary = _read_manifest_lenient(path)
        if header is not None and header.get("config_digest") != config.digest():
            raise ConfigError(
                f"manifest {path} was produced by a different configuration")

    started = time.time()
    with path.open("a", encoding="utf-8") as stream:
        if header is None:
            header = _build_header(config, dataset)
            _write_record(stream, header)

        done_indices = {record["plan_index"] for record in existing}
        pending = [plan for plan in plans if plan.plan_index not in done_indices]
        records = list(existing)

        if summary is None:
            new_records = _execute_plans(
                pending, config, strategy, dataset, provider)
            for record in new_records:
                _write_record(stream, record)
                records.append(record)

            metrics_report = _score_records(records, task, config)
            summary = {
                "kind": "summary",
                "metrics": metrics_report.to_record(),
                "totals": _totals(records),
                "timing": {
                    "started_at": started,
                    "finished_at": time.time(),
                },
            }
            _write_record(stream, summary)
        else:
            metrics_report = _score_records(records, task, config)

    return RunManifest(path=path, header=header, requests=records,
                       summary=summary, metrics=metrics_report)


def _execute_plans(pending: list[RequestPlan], config: RunConfig,
                   strategy: Strategy, dataset: Dataset,
                   provider: ChatProvider) -> Iterable[dict]:
    """Run plans (optionally concurrently); yield records in plan order."""
    if config.concurrency == 1:
        for plan in pending:
            yield _execute_one(plan, config, strategy, dataset, provider)
        return
    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        futures = [pool.submit(_execute_one, plan, config, strategy,
                               dataset, provider)
                   for plan in pending]
        for future in futures:
            yield future.result()


def _execute_one(plan: RequestPlan, config: RunConfig, strategy: Strategy,
                 dataset: Dataset, provider: ChatProvider) -> dict:
    examples = [dataset.get(i) for i in plan.example_ids]
    queries = [dataset.get(i) for i in plan.query_ids]
    figures = build_figures(strategy, examples, queries)
    package = render_prompt(strategy, dataset.task, examples, queries, figures)

    transport_error: str | None = None
    try:
        response: ModelResponse | None = provider.send(package)
    except TransportError as exc:
        response = None
        transport_error = f"{exc.category}: {exc}"

    raw = response.text if response is not None else ""
    if response is not None:
        predictions = parse_labels(raw, list(package.query_index_map),
                                   dataset.task, _parser_synonyms(config, dataset.task))
    else:
        predictions = [
            Prediction(item_id=item_id, predicted=None,
                       status=ParseStatus.UNPARSEABLE, explanation="",
                       matched_line=None, visible_index=index)
            for index, item_id in package.query_index_map
        ]

    truths = dataset.truths()
    record = {
        "kind": "request",
        "plan_index": plan.plan_index,
        "example_ids": list(plan.example_ids),
        "expected": [[index, item_id] for index, item_id in package.query_index_map],
        "prompt_text": package.text,
        "attachments": [att.digest() for att in package.attachments],
        "figures": [fig.to_record() for fig in figures] if figures else [],
        "raw_response": raw,
        "predictions": [
            pred.to_record(truth=truths.get(pred.item_id)) for pred in predictions
        ],
        "attempts": response.attempts if response is not None else None,
        "latency_ms": response.latency_ms if response is not None else None,
        "timestamp": response.timestamp if response is not None else time.time(),
    }
    if transport_error:
        record["transport_error"] = transport_error
    return record


def _parser_synonyms(config: RunConfig,
                     task: tuple[ClassLabel, ClassLabel]) -> dict[str, ClassLabel] | None:
    if config.synonyms is None:
        return None
    return resolve_synonyms(config.synonyms, task)


def resolve_synonyms(table: Mapping[str, str],
                     task: tuple[ClassLabel, ClassLabel]) -> dict[str, ClassLabel]:
    by_key = {label.key: label for label in task}
    resolved: dict[str, ClassLabel] = {}
    for alias, class_name in table.items():
        label = by_key.get(class_name.strip().casefold())
        if label is None:
            raise ConfigError(f"synonym {alias!r} maps to unknown class {class_name!r}")
        resolved[alias] = label
    return resolved


def _build_header(config: RunConfig, dataset: Dataset) -> dict:
    return {
        "kind": "header",
        "manifest_version": MANIFEST_VERSION,
        "config": config.snapshot(),
        "config_digest": config.digest(),
        "task": [dataset.task[0].name, dataset.task[1].name],
        "counts": {split: dict(per) for split, per in dataset.counts.items()},
        "validation": validate(dataset).to_record(),
        "template_digests": template_digests(),
        "deviations": _strategy_deviation_notes(config),
    }


def _positive_label(task: tuple[ClassLabel, ClassLabel],
                    positive_class: str | None) -> ClassLabel:
    if positive_class is None:
        return task[0]
    for label in task:
        if label.matches_name(positive_class):
            return label
    raise ConfigError(f"positive class {positive_class!r} is not a task class")


def _score_records(records: list[dict], task: tuple[ClassLabel, ClassLabel],
                   config: RunConfig) -> MetricsReport:
    predictions, truths = _predictions_from_records(records, task)
    positive = _positive_label(task, config.positive_class)
    negative = task[1] if positive == task[0] else task[0]
    return score_predictions(predictions, truths, positive,
                             config.abstention_policy,
                             positive_name=positive.name,
                             negative_name=negative.name)


def _predictions_from_records(
    records: list[dict], task: tuple[ClassLabel, ClassLabel],
) -> tuple[list[Prediction], dict[str, ClassLabel]]:
    by_name = {label.key: label for label in task}
    predictions: list[Prediction] = []
    truths: dict[str, ClassLabel] = {}
    for record in sorted(records, key=lambda r: r["plan_index"]):
        for entry in record["predictions"]:
            predicted = (by_name[entry["predicted"].casefold()]
                         if entry.get("predicted") else None)
            predictions.append(Prediction(
                item_id=entry["item_id"],
                predicted=predicted,
                status=ParseStatus(entry["status"]),
                explanation=entry.get("explanation", ""),
                matched_line=entry.get("matched_line"),
                visible_index=entry.get("visible_index"),
            ))
            if entry.get("truth"):
                truths[entry["item_id"]] = by_name[entry["truth"].casefold()]
    return predictions, truths


def _totals(records: list[dict]) -> dict:
    statuses = [entry["status"] for record in records
                for entry in record["predictions"]]
    return {
        "requests": len(records),
        "items": len(statuses),
        "parsed": statuses.count(ParseStatus.PARSED.value),
        "abstained": statuses.count(ParseStatus.ABSTAINED.value),
        "unparseable": statuses.count(ParseStatus.UNPARSEABLE.value),
        "ambiguous": statuses.count(ParseStatus.AMBIGUOUS.value),
    }


def _write_record(stream, record: dict) -> None:
    stream.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    stream.flush()


def _read_manifest_lenient(path: Path) -> tuple[dict | None, list[dict], dict | None]:
    """Resume-time reader: tolerates a torn final line, nothing else."""
    header, requests, summary = None, [], None
    lines = path.read_text(encoding="utf-8").splitlines()
    for line_no, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            if line_no == len(lines) - 1:
                break  # torn write from an interrupted run
            raise ManifestIntegrityError(
                f"{path}: record {line_no + 1} is not valid JSON")
        kind = record.get("kind")
        if kind == "header":
            header = record
        elif kind == "request":
            requests.append(record)
        elif kind == "summary":
            summary = record
    return header, requests, summary


def read_manifest(path: str | Path) -> tuple[dict, list[dict], dict | None]:
    """Strict reader: any unreadable or out-of-place record is an error."""
    path = Path(path)
    if not path.exists():
        raise ManifestIntegrityError(f"manifest {path} does not exist")
    header, requests, summary = None, [], None
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            raise ManifestIntegrityError(f"{path}: record {line_no + 1} is empty")
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestIntegrityError(
                f"{path}: record {line_no + 1} is not valid JSON") from exc
        kind = record.get("kind")
        if kind == "header":
            if header is not None or line_no != 0:
                raise ManifestIntegrityError(f"{path}: misplaced header record")
            header = record
        elif kind == "request":
            if not {"plan_index", "expected", "raw_response"} <= record.keys():
                raise ManifestIntegrityError(
                    f"{path}: record {line_no + 1} is missing request fields")
            requests.append(record)
        elif kind == "summary":
            summary = record
        else:
            raise ManifestIntegrityError(
                f"{path}: record {line_no + 1} has unknown kind {kind!r}")
    if header is None:
        raise ManifestIntegrityError(f"{path}: missing header record")
    return header, requests, summary


def score_manifest(path: str | Path,
                   synonyms: Mapping[str, str] | None = None,
                   abstention_policy: AbstentionPolicy | None = None) -> RescoreResult:
    """Re-parse and re-score a manifest offline, no network access."""
    header, requests, summary = read_manifest(path)
    if not requests:
        raise ManifestIntegrityError(f"{path}: no request records to score")

    task = (ClassLabel(header["task"][0]), ClassLabel(header["task"][1]))
    config_snapshot = header["config"]
    policy = abstention_policy or AbstentionPolicy(config_snapshot["abstention_policy"])
    table = synonyms if synonyms is not None else config_snapshot.get("synonyms")
    parser_synonyms = resolve_synonyms(table, task) if table else None

    predictions: list[Prediction] = []
    truths: dict[str, ClassLabel] = {}
    by_key = {label.key: label for label in task}
    for record in sorted(requests, key=lambda r: r["plan_index"]):
        expected = [(int(index), item_id) for index, item_id in record["expected"]]
        predictions.extend(parse_labels(record["raw_response"], expected, task,
                                        parser_synonyms))
        for entry in record["predictions"]:
            if entry.get("truth"):
                truths[entry["item_id"]] = by_key[entry["truth"].casefold()]

    positive = _positive_label(task, config_snapshot.get("positive_class"))
    negative = task[1] if positive == task[0] else task[0]
    recomputed = score_predictions(predictions, truths, positive, policy,
                                   positive_name=positive.name,
                                   negative_name=negative.name)

    embedded = summary["metrics"] if summary else None
    matches = embedded is not None and embedded == recomputed.to_record()
    parsed = sum(1 for p in predictions if p.status is ParseStatus.PARSED)
    return RescoreResult(recomputed=recomputed, embedded=embedded,
                         matches_embedded=matches, parsed_count=parsed)


def strip_volatile(text: str) -> str:
    """Canonical manifest content with wall-clock fields removed."""
    out_lines = []
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        out_lines.append(json.dumps(_drop_volatile(record), sort_keys=True,
                                    separators=(",", ":")))
    return "\n".join(out_lines) + "\n"


def _drop_volatile(value):
    if isinstance(value, dict):
        return {k: _drop_volatile(v) for k, v in value.items()
                if k not in VOLATILE_KEYS}
    if isinstance(value, list):
        return [_drop_volatile(v) for v in value]
    return value


def manifest_fingerprint(path: str | Path) -> str:
    """Digest of the manifest minus timestamps; equal runs compare equal."""
    text = Path(path).read_text(encoding="utf-8")
    return hashlib.sha256(strip_volatile(text).encode("utf-8")).hexdigest()


CSV_HEADER = ["strategy", "seed", "tp", "fp", "fn", "tn",
              "p_pos", "r_pos", "f1_pos", "p_neg", "r_neg", "f1_neg",
              "accuracy", "scored", "excluded"]


def summary_csv_rows(manifest_paths: Sequence[str | Path]) -> list[list[str]]:
    rows = []
    for path in manifest_paths:
        header, _requests, summary = read_manifest(path)
        if summary is None:
            raise ManifestIntegrityError(f"{path}: run has no summary record")
        metrics = summary["metrics"]
        matrix = metrics["matrix"]
        rounded = metrics["rounded"]
        rows.append([
            header["config"]["strategy"],
            str(header["config"]["seed"]),
            str(matrix["tp"]), str(matrix["fp"]),
            str(matrix["fn"]), str(matrix["tn"]),
            rounded["p_pos"], rounded["r_pos"], rounded["f1_pos"],
            rounded["p_neg"], rounded["r_neg"], rounded["f1_neg"],
            rounded["accuracy"],
            str(metrics["scored"]), str(metrics["excluded"]),
        ])
    return rows


def write_summary_csv(manifest_paths: Sequence[str | Path],
                      out_path: str | Path) -> Path:
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(CSV_HEADER)
        writer.writerows(summary_csv_rows(manifest_paths))
    return out_path
