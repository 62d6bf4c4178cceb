"""Few-shot prompting harness for vision-language chat models.

Evaluates a vision chat model on a two-class image dataset under seven
prompting strategies (zero-shot through 6-shot grid prompts, with and
without example reasoning), with deterministic grid composition, strict
response parsing, per-class metrics and re-scorable run manifests.
"""

from .composer import ComposedFigure, GridLayout, compose_grid, default_layout
from .dataset import (ClassLabel, Dataset, LabeledImage, ValidationReport,
                      load_dataset, stratified_sample, validate)
from .metrics import (AbstentionPolicy, ClassMetrics, ConfusionMatrix,
                      MetricsReport, confusion, report, score_predictions)
from .parser import ParseStatus, Prediction, default_synonyms, parse_labels
from .prompts import (DEFAULT_REASONING, PromptPackage, Strategy, StrategyKind,
                      render_prompt, template_digests, template_text)
from .provider import (ChatProvider, ModelResponse, ProviderConfig,
                       encode_request, mock_provider)
from .runner import (RunConfig, RunManifest, RequestPlan, RescoreResult,
                     manifest_fingerprint, plan_requests, run_experiment,
                     score_manifest, strip_volatile, write_summary_csv)

__version__ = "0.1.0"

__all__ = [
    "AbstentionPolicy", "ChatProvider", "ClassLabel", "ClassMetrics",
    "ComposedFigure", "ConfusionMatrix", "DEFAULT_REASONING", "Dataset",
    "GridLayout", "LabeledImage", "MetricsReport", "ModelResponse",
    "ParseStatus", "Prediction", "PromptPackage", "ProviderConfig",
    "RequestPlan", "RescoreResult", "RunConfig", "RunManifest", "Strategy",
    "StrategyKind", "ValidationReport", "compose_grid", "confusion",
    "default_layout", "default_synonyms", "encode_request", "load_dataset",
    "manifest_fingerprint", "mock_provider", "parse_labels", "plan_requests",
    "render_prompt", "report", "run_experiment", "score_manifest",
    "score_predictions", "stratified_sample", "strip_volatile",
    "template_digests", "template_text", "validate", "write_summary_csv",
]
