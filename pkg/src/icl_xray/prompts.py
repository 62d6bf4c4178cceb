"""Render the seven prompting strategies into provider-ready packages.

Templates live as golden text files under ``templates/``; rendering fills
the dynamic regions (example label block, query references, reasoning) and
substitutes the two task class names. Everything for one request is packed
into a single user message: attachments first, prompt text last.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Sequence, Union

from .composer import ComposedFigure
from .dataset import ClassLabel, LabeledImage
from .errors import RenderError

# shipped placeholder for the reasoning strategies; replace via config with
# task-appropriate observations
DEFAULT_REASONING = "visible opacities in the lung fields"

ICL3_DEVIATION_NOTE = (
    "icl3 instruction requests one result per group instead of the original"
    " 'generate 4 results' wording (inconsistent with its 3-group batch)")
ICL_R2_DEVIATION_NOTE = (
    "icl_r2 example explanation contrasts the second class's image range"
    " instead of the original 'image 2' reference (inconsistent with its"
    " own example labels)")
DEFAULT_REASONING_NOTE = (
    "reasoning strategies are using the shipped placeholder explanation"
    " text; supply reasoning_text for task-specific observations")

_MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


class StrategyKind(str, Enum):
    NAIVE = "naive"
    ICL1 = "icl1"
    ICL2 = "icl2"
    ICL3 = "icl3"
    ICL4 = "icl4"
    ICL_R1 = "icl_r1"
    ICL_R2 = "icl_r2"


# kind -> (shots_per_class, queries_per_request, combine_into_figure, needs_reasoning)
_STRATEGY_TABLE: dict[StrategyKind, tuple[int, int, bool, bool]] = {
    StrategyKind.NAIVE: (0, 1, False, False),
    StrategyKind.ICL1: (1, 1, False, False),
    StrategyKind.ICL2: (1, 1, True, False),
    StrategyKind.ICL3: (1, 3, True, False),
    StrategyKind.ICL4: (3, 3, True, False),
    StrategyKind.ICL_R1: (1, 1, False, True),
    StrategyKind.ICL_R2: (3, 3, True, True),
}


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    shots_per_class: int
    queries_per_request: int
    combine_into_figure: bool
    reasoning_text: str | None = None

    def __post_init__(self) -> None:
        shots, queries, combine, needs_reasoning = _STRATEGY_TABLE[self.kind]
        if self.queries_per_request != queries or self.combine_into_figure != combine:
            raise RenderError(f"{self.kind.value}: queries/figure flags are fixed by kind")
        if self.shots_per_class < 0:
            raise RenderError("shots_per_class must be non-negative")
        if self.kind is StrategyKind.NAIVE and self.shots_per_class != 0:
            raise RenderError("naive strategy takes no shots")
        if needs_reasoning and not self.reasoning_text:
            raise RenderError(f"{self.kind.value} requires reasoning_text")
        if not needs_reasoning and self.reasoning_text is not None:
            raise RenderError(f"{self.kind.value} does not take reasoning_text")

    @classmethod
    def of(cls, kind: StrategyKind | str, reasoning_text: str | None = None,
           shots_per_class: int | None = None) -> "Strategy":
        kind = StrategyKind(kind)
        shots, queries, combine, needs_reasoning = _STRATEGY_TABLE[kind]
        if needs_reasoning and reasoning_text is None:
            raise RenderError(f"{kind.value} requires reasoning_text")
        return cls(
            kind=kind,
            shots_per_class=shots if shots_per_class is None else shots_per_class,
            queries_per_request=queries,
            combine_into_figure=combine,
            reasoning_text=reasoning_text if needs_reasoning else None,
        )


@dataclass(frozen=True)
class Attachment:
    id: str
    media_type: str
    data: bytes

    def digest(self) -> str:
        return hashlib.sha256(self.data).hexdigest()


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    attachment: Attachment


@dataclass(frozen=True)
class Message:
    role: str
    parts: tuple[Union[TextPart, ImagePart], ...]


@dataclass(frozen=True)
class PromptPackage:
    messages: tuple[Message, ...]
    query_index_map: tuple[tuple[int, str], ...]
    strategy_kind: StrategyKind
    deviation_notes: tuple[str, ...] = ()

    @property
    def text(self) -> str:
        return "\n".join(part.text for message in self.messages
                         for part in message.parts if isinstance(part, TextPart))

    @property
    def attachments(self) -> tuple[Attachment, ...]:
        return tuple(part.attachment for message in self.messages
                     for part in message.parts if isinstance(part, ImagePart))


@lru_cache(maxsize=None)
def template_text(kind: StrategyKind | str) -> str:
    """The stored golden template for a strategy, byte-stable across calls."""
    kind = StrategyKind(kind)
    path = resources.files("icl_xray").joinpath(f"templates/{kind.value}.txt")
    return path.read_text(encoding="utf-8").rstrip("\n")


def template_digests() -> dict[str, str]:
    return {kind.value: hashlib.sha256(template_text(kind).encode("utf-8")).hexdigest()
            for kind in StrategyKind}


def render_prompt(
    strategy: Strategy,
    task: tuple[ClassLabel, ClassLabel],
    examples: Sequence[LabeledImage],
    queries: Sequence[LabeledImage],
    figures: Sequence[ComposedFigure] | None = None,
) -> PromptPackage:
    """Build the single-message package for one request.

    ``queries`` may be shorter than the strategy's queries-per-request for
    the final leftover group of a run; all other arities are strict.
    """
    _check_arities(strategy, task, examples, queries, figures)

    example_count = len(examples)
    query_indices = _query_indices(strategy, example_count, len(queries))
    text = _render_text(strategy, task, examples, queries, query_indices)

    parts: list[Union[TextPart, ImagePart]] = []
    if strategy.combine_into_figure:
        assert figures is not None
        for g, figure in enumerate(figures, start=1):
            parts.append(ImagePart(Attachment(
                id=f"figure-{g}", media_type="image/png", data=figure.to_png_bytes())))
    else:
        for item in list(examples) + list(queries):
            parts.append(ImagePart(_file_attachment(item)))
    parts.append(TextPart(text))

    notes: list[str] = []
    if strategy.kind is StrategyKind.ICL3:
        notes.append(ICL3_DEVIATION_NOTE)
    if strategy.kind is StrategyKind.ICL_R2:
        notes.append(ICL_R2_DEVIATION_NOTE)
    if strategy.reasoning_text == DEFAULT_REASONING:
        notes.append(DEFAULT_REASONING_NOTE)

    return PromptPackage(
        messages=(Message(role="user", parts=tuple(parts)),),
        query_index_map=tuple(zip(query_indices, (q.id for q in queries))),
        strategy_kind=strategy.kind,
        deviation_notes=tuple(notes),
    )


def _check_arities(strategy: Strategy, task: tuple[ClassLabel, ClassLabel],
                   examples: Sequence[LabeledImage],
                   queries: Sequence[LabeledImage],
                   figures: Sequence[ComposedFigure] | None) -> None:
    kind = strategy.kind.value
    expected_examples = 2 * strategy.shots_per_class
    if len(examples) != expected_examples:
        raise RenderError(
            f"{kind}: expected {expected_examples} example images, got {len(examples)}")
    if not 1 <= len(queries) <= strategy.queries_per_request:
        raise RenderError(
            f"{kind}: expected 1..{strategy.queries_per_request} query images,"
            f" got {len(queries)}")
    if strategy.combine_into_figure:
        if not figures:
            raise RenderError(f"{kind}: composed figures required")
        if strategy.kind is StrategyKind.ICL3:
            if len(figures) != len(queries):
                raise RenderError(
                    f"{kind}: expected one figure per group"
                    f" ({len(queries)}), got {len(figures)}")
            for figure in figures:
                if len(figure.placements) != len(examples) + 1:
                    raise RenderError(f"{kind}: each group figure must hold"
                                      f" {len(examples) + 1} images")
        else:
            if len(figures) != 1:
                raise RenderError(f"{kind}: expected exactly one figure")
            if len(figures[0].placements) != len(examples) + len(queries):
                raise RenderError(
                    f"{kind}: figure holds {len(figures[0].placements)} images,"
                    f" expected {len(examples) + len(queries)}")
    elif figures:
        raise RenderError(f"{kind}: does not take composed figures")

    # the label block must enumerate the first class's shots first
    boundary = strategy.shots_per_class
    for position, item in enumerate(examples):
        wanted = task[0] if position < boundary else task[1]
        if item.label != wanted:
            raise RenderError(
                f"{kind}: examples must be ordered first-class block first"
                f" (position {position + 1} holds {item.label.name!r},"
                f" expected {wanted.name!r})")


def _query_indices(strategy: Strategy, example_count: int, query_count: int) -> list[int]:
    if strategy.kind is StrategyKind.ICL3:
        # every group reuses the same in-figure index (shots + 1)
        return [example_count + 1] * query_count
    first = example_count + 1
    return list(range(first, first + query_count))


def _image_phrase(indices: Sequence[int]) -> str:
    refs = [f"image {i}" for i in indices]
    if len(refs) == 1:
        return refs[0]
    return ", ".join(refs[:-1]) + " and " + refs[-1]


def _class_block_refs(shots: int) -> tuple[str, str]:
    if shots == 1:
        return "image 1", "image 2"
    return f"image 1-{shots}", f"image {shots + 1}-{2 * shots}"


def _render_text(strategy: Strategy, task: tuple[ClassLabel, ClassLabel],
                 examples: Sequence[LabeledImage], queries: Sequence[LabeledImage],
                 query_indices: Sequence[int]) -> str:
    text = template_text(strategy.kind)

    example_block = "\n".join(
        f"Image {i}: {item.label.name}" for i, item in enumerate(examples, start=1))
    text = text.replace("{example_block}", example_block)

    if strategy.kind is StrategyKind.ICL3:
        text = text.replace("{group_count}", str(len(queries)))
        text = text.replace("{group_query_index}", str(query_indices[0]))
    else:
        text = text.replace("{query_refs}", _image_phrase(query_indices))
        text = text.replace("{query_ref_cap}", f"Image {query_indices[0]}")

    if strategy.reasoning_text is not None:
        ref1, ref2 = _class_block_refs(strategy.shots_per_class)
        text = text.replace("{class1_ref}", ref1)
        text = text.replace("{class2_ref}", ref2)
        text = text.replace("{reasoning}", strategy.reasoning_text)

    names = {"class1": task[0].name, "class2": task[1].name}
    return re.sub(r"\bclass([12])\b", lambda m: names[m.group(0)], text)


def _file_attachment(item: LabeledImage) -> Attachment:
    media_type = _MEDIA_TYPES.get(item.path.suffix.lower())
    if media_type is None:
        raise RenderError(f"unsupported attachment type for {item.id!r}")
    return Attachment(id=item.id, media_type=media_type, data=item.path.read_bytes())
