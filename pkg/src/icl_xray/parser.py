"""Extract per-query class labels from free-text model responses.

Scanning is line-oriented (the prompts demand one label line per query)
and never raises on model phrasing: every failure mode becomes a status.
For each expected query index the first unconsumed line that names the
index (``Image <n>``) and mentions a class decides the outcome; when a
request carries a single query, any line mentioning a class qualifies.
A line mentioning both classes is ambiguous; refusals become abstentions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .dataset import ClassLabel

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")

REFUSAL_MARKERS = (
    "i cannot", "i can't", "i am unable", "i'm unable", "unable to",
    "cannot assist", "cannot provide", "cannot classify", "cannot diagnose",
    "not able to", "i won't", "as an ai",
)


class ParseStatus(str, Enum):
    PARSED = "parsed"
    ABSTAINED = "abstained"
    UNPARSEABLE = "unparseable"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class Prediction:
    item_id: str
    predicted: ClassLabel | None
    status: ParseStatus
    explanation: str
    matched_line: str | None
    visible_index: int | None = None

    def __post_init__(self) -> None:
        if (self.predicted is not None) != (self.status is ParseStatus.PARSED):
            raise ValueError("predicted label present iff status is parsed")

    def to_record(self, truth: ClassLabel | None = None) -> dict:
        record = {
            "item_id": self.item_id,
            "visible_index": self.visible_index,
            "status": self.status.value,
            "predicted": self.predicted.name if self.predicted else None,
            "matched_line": self.matched_line,
            "explanation": self.explanation,
        }
        if truth is not None:
            record["truth"] = truth.name
        return record


def default_synonyms(task: tuple[ClassLabel, ClassLabel]) -> dict[str, ClassLabel]:
    """Class names plus the stock aliases for covid/normal-style tasks."""
    table: dict[str, ClassLabel] = {}
    for label in task:
        table[label.key] = label
        if label.key == "covid":
            table["covid-19"] = label
            table["positive"] = label
        if label.key == "normal":
            table["healthy"] = label
            table["negative"] = label
    return table


def parse_labels(
    raw: str,
    expected: Sequence[tuple[int, str]],
    task: tuple[ClassLabel, ClassLabel],
    synonyms: Mapping[str, ClassLabel] | None = None,
) -> list[Prediction]:
    """One Prediction per expected (visible index, item id) pair, in order."""
    if not expected:
        raise ValueError("expected query list must be non-empty")
    aliases = _normalize_aliases(task, synonyms)

    lines = raw.splitlines()
    tokenized = [_tokens(line) for line in lines]
    mentions = [_line_mentions(tokens, aliases) for tokens in tokenized]

    single = len(expected) == 1
    consumed: set[int] = set()
    matches: list[tuple[int, str, set[ClassLabel]] | None] = []
    last_matched_line = -1

    for visible_index, _item_id in expected:
        found = None
        for line_no, line in enumerate(lines):
            if line_no in consumed or not mentions[line_no]:
                continue
            if single or _names_index(tokenized[line_no], visible_index):
                found = (line_no, line, mentions[line_no])
                break
        matches.append(found)
        if found is not None:
            consumed.add(found[0])
            last_matched_line = max(last_matched_line, found[0])

    if last_matched_line >= 0:
        explanation = "\n".join(lines[last_matched_line + 1:]).strip()
    else:
        explanation = raw.strip()
    refused = _looks_like_refusal(raw)

    predictions: list[Prediction] = []
    for (visible_index, item_id), found in zip(expected, matches):
        if found is None:
            status = ParseStatus.ABSTAINED if refused else ParseStatus.UNPARSEABLE
            predictions.append(Prediction(
                item_id=item_id, predicted=None, status=status,
                explanation=explanation, matched_line=None,
                visible_index=visible_index))
        else:
            _line_no, line, labels = found
            if len(labels) > 1:
                predictions.append(Prediction(
                    item_id=item_id, predicted=None, status=ParseStatus.AMBIGUOUS,
                    explanation=explanation, matched_line=line,
                    visible_index=visible_index))
            else:
                predictions.append(Prediction(
                    item_id=item_id, predicted=next(iter(labels)),
                    status=ParseStatus.PARSED, explanation=explanation,
                    matched_line=line, visible_index=visible_index))
    return predictions


def _normalize_aliases(
    task: tuple[ClassLabel, ClassLabel],
    synonyms: Mapping[str, ClassLabel] | None,
) -> dict[tuple[str, ...], ClassLabel]:
    source = default_synonyms(task) if synonyms is None else dict(synonyms)
    for label in task:  # class names always count as aliases
        source.setdefault(label.key, label)
    normalized: dict[tuple[str, ...], ClassLabel] = {}
    for alias, label in source.items():
        if label not in task:
            raise ValueError(f"synonym {alias!r} maps to non-task class {label.name!r}")
        key = tuple(_tokens(alias))
        if not key:
            raise ValueError(f"synonym {alias!r} has no matchable tokens")
        if key in normalized and normalized[key] != label:
            raise ValueError(f"synonym {alias!r} is claimed by both classes")
        normalized[key] = label
    return normalized


def _looks_like_refusal(raw: str) -> bool:
    folded = raw.casefold()
    return any(marker in folded for marker in REFUSAL_MARKERS)


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def _line_mentions(tokens: Sequence[str],
                   aliases: Mapping[tuple[str, ...], ClassLabel]) -> set[ClassLabel]:
    found: set[ClassLabel] = set()
    for alias_tokens, label in aliases.items():
        span = len(alias_tokens)
        if any(tuple(tokens[i:i + span]) == alias_tokens
               for i in range(len(tokens) - span + 1)):
            found.add(label)
    return found


def _names_index(tokens: Sequence[str], visible_index: int) -> bool:
    wanted = str(visible_index)
    return any(tok == "image" and tokens[i + 1] == wanted
               for i, tok in enumerate(tokens[:-1]))
