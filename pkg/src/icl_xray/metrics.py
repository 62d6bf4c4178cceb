"""Two-class confusion matrices and precision/recall/F1/accuracy reports.

Counts are tallied against a designated positive class. The rounded view
recomputes every figure from the integer counts as exact decimals, so
2-decimal half-up rounding is bit-stable (no float artifacts).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import DegenerateMatrixError, ScoringError

if TYPE_CHECKING:
    from .dataset import ClassLabel
    from .parser import Prediction


class AbstentionPolicy(str, Enum):
    """How unparsed/abstained predictions are scored."""

    COUNT_AS_ERROR = "count_as_error"
    EXCLUDE = "exclude"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """The same tallies with the positive class designation flipped."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    positive: ClassMetrics
    negative: ClassMetrics
    accuracy: float
    matrix: ConfusionMatrix
    scored: int
    excluded: int
    positive_name: str = "positive"
    negative_name: str = "negative"

    def rounded(self) -> dict[str, Decimal]:
        """2-decimal half-up view, computed exactly from the integer counts."""
        m = self.matrix
        return {
            "p_pos": _ratio2(m.tp, m.tp + m.fp),
            "r_pos": _ratio2(m.tp, m.tp + m.fn),
            "f1_pos": _ratio2(2 * m.tp, 2 * m.tp + m.fp + m.fn),
            "p_neg": _ratio2(m.tn, m.tn + m.fn),
            "r_neg": _ratio2(m.tn, m.tn + m.fp),
            "f1_neg": _ratio2(2 * m.tn, 2 * m.tn + m.fn + m.fp),
            "accuracy": _ratio2(m.tp + m.tn, m.total),
        }

    def to_record(self) -> dict:
        """Machine-readable form embedded in run manifests."""
        return {
            "matrix": {"tp": self.matrix.tp, "fp": self.matrix.fp,
                       "fn": self.matrix.fn, "tn": self.matrix.tn},
            "positive_class": self.positive_name,
            "negative_class": self.negative_name,
            "precision_pos": self.positive.precision,
            "recall_pos": self.positive.recall,
            "f1_pos": self.positive.f1,
            "precision_neg": self.negative.precision,
            "recall_neg": self.negative.recall,
            "f1_neg": self.negative.f1,
            "accuracy": self.accuracy,
            "scored": self.scored,
            "excluded": self.excluded,
            "rounded": {k: str(v) for k, v in self.rounded().items()},
        }

    def to_text(self) -> str:
        r = self.rounded()
        lines = [
            f"{self.positive_name}: precision={r['p_pos']} recall={r['r_pos']} f1={r['f1_pos']}",
            f"{self.negative_name}: precision={r['p_neg']} recall={r['r_neg']} f1={r['f1_neg']}",
            f"accuracy={r['accuracy']}  (scored={self.scored}, excluded={self.excluded})",
            f"matrix: tp={self.matrix.tp} fp={self.matrix.fp} fn={self.matrix.fn} tn={self.matrix.tn}",
        ]
        return "\n".join(lines)


def _ratio2(num: int, den: int) -> Decimal:
    if den == 0:
        return Decimal("0.00")
    return (Decimal(num) / Decimal(den)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def _safe_div(num: int, den: int) -> float:
    return num / den if den else 0.0


def confusion(
    predictions: Iterable["Prediction"],
    truths: Mapping[str, "ClassLabel"],
    positive: "ClassLabel",
    abstention_policy: AbstentionPolicy = AbstentionPolicy.COUNT_AS_ERROR,
) -> ConfusionMatrix:
    """Tally predictions against ground truth.

    Parsed predictions tally normally. Anything else (abstained,
    unparseable, ambiguous) tallies as a misclassification of its true
    class under COUNT_AS_ERROR, or is dropped under EXCLUDE.
    """
    tp = fp = fn = tn = 0
    for pred in predictions:
        if pred.item_id not in truths:
            raise ScoringError(f"no ground-truth entry for item {pred.item_id!r}")
        truth_is_pos = truths[pred.item_id] == positive
        if pred.predicted is None:
            if abstention_policy is AbstentionPolicy.EXCLUDE:
                continue
            # forced error: predict the opposite of the truth
            pred_is_pos = not truth_is_pos
        else:
            pred_is_pos = pred.predicted == positive
        if truth_is_pos and pred_is_pos:
            tp += 1
        elif truth_is_pos:
            fn += 1
        elif pred_is_pos:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def report(
    matrix: ConfusionMatrix,
    excluded: int = 0,
    positive_name: str = "positive",
    negative_name: str = "negative",
) -> MetricsReport:
    """Per-class precision/recall/F1 plus accuracy; 0/0 cases score as 0."""
    if matrix.total == 0:
        raise DegenerateMatrixError("confusion matrix has no scored items")
    swapped = matrix.swapped()
    return MetricsReport(
        positive=_class_metrics(matrix),
        negative=_class_metrics(swapped),
        accuracy=(matrix.tp + matrix.tn) / matrix.total,
        matrix=matrix,
        scored=matrix.total,
        excluded=excluded,
        positive_name=positive_name,
        negative_name=negative_name,
    )


def _class_metrics(m: ConfusionMatrix) -> ClassMetrics:
    precision = _safe_div(m.tp, m.tp + m.fp)
    recall = _safe_div(m.tp, m.tp + m.fn)
    if precision == 0.0 and recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassMetrics(precision=precision, recall=recall, f1=f1)


def score_predictions(
    predictions: list["Prediction"],
    truths: Mapping[str, "ClassLabel"],
    positive: "ClassLabel",
    abstention_policy: AbstentionPolicy = AbstentionPolicy.COUNT_AS_ERROR,
    positive_name: str = "positive",
    negative_name: str = "negative",
) -> MetricsReport:
    """Convenience wrapper: confusion + report with the excluded count filled in."""
    matrix = confusion(predictions, truths, positive, abstention_policy)
    excluded = len(predictions) - matrix.total
    return report(matrix, excluded=excluded,
                  positive_name=positive_name, negative_name=negative_name)
