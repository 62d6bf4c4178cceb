"""Disk-backed two-class image datasets: loading, validation, seeded sampling.

Layout contract: ``<root>/{train,test}/<class_name>/*.{png,jpg,jpeg}``.
Class labels are inferred from directory names; the task's class order is
the lexical order of those names unless explicitly overridden.
"""

from __future__ import annotations

import hashlib
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from PIL import Image

from .errors import DatasetStructureError, SamplingError, TaskArityError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
SPLITS = ("train", "test")

# minority/majority ratio below which validate() flags a split as imbalanced
BALANCE_WARN_RATIO = 1 / 3


class ClassLabel:
    """A class name compared case-insensitively with whitespace trimmed."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        if not name or not name.strip():
            raise ValueError("class label must be non-empty")
        self.name = name.strip()

    @property
    def key(self) -> str:
        return self.name.casefold()

    def matches_name(self, name: str) -> bool:
        return self.key == name.strip().casefold()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ClassLabel):
            return self.key == other.key
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"ClassLabel({self.name!r})"


@dataclass(frozen=True)
class LabeledImage:
    id: str
    path: Path
    label: ClassLabel
    split: str
    width: int
    height: int


@dataclass(frozen=True)
class Dataset:
    task: tuple[ClassLabel, ClassLabel]
    items: tuple[LabeledImage, ...]
    load_warnings: tuple[str, ...] = ()
    counts: Mapping[str, Mapping[str, int]] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.task[0] == self.task[1]:
            raise TaskArityError(f"task classes must differ, got {self.task[0].name!r} twice")
        derived = self._derive_counts()
        if self.counts is None:
            object.__setattr__(self, "counts", derived)
        elif {s: dict(c) for s, c in self.counts.items()} != derived:
            raise DatasetStructureError("declared per-split counts do not match items")
        seen: set[str] = set()
        for item in self.items:
            if item.id in seen:
                raise DatasetStructureError(f"duplicate item id {item.id!r}")
            seen.add(item.id)
            if item.label not in self.task:
                raise DatasetStructureError(
                    f"item {item.id!r} labeled {item.label.name!r}, not a task class")

    def _derive_counts(self) -> dict[str, dict[str, int]]:
        counts: dict[str, dict[str, int]] = {
            split: {label.name: 0 for label in self.task} for split in SPLITS}
        for item in self.items:
            name = self.task[self.task.index(item.label)].name
            counts.setdefault(item.split, {}).setdefault(name, 0)
            counts[item.split][name] += 1
        return counts

    def split_items(self, split: str) -> tuple[LabeledImage, ...]:
        return tuple(item for item in self.items if item.split == split)

    def class_items(self, split: str, label: ClassLabel) -> tuple[LabeledImage, ...]:
        return tuple(item for item in self.items
                     if item.split == split and item.label == label)

    def get(self, item_id: str) -> LabeledImage:
        for item in self.items:
            if item.id == item_id:
                return item
        raise KeyError(item_id)

    def truths(self, split: str | None = None) -> dict[str, ClassLabel]:
        return {item.id: item.label for item in self.items
                if split is None or item.split == split}


@dataclass(frozen=True)
class ValidationReport:
    counts: Mapping[str, Mapping[str, int]]
    min_width: int
    max_width: int
    min_height: int
    max_height: int
    duplicate_ids: tuple[str, ...]
    duplicate_content: tuple[tuple[str, ...], ...]
    balance: Mapping[str, float]
    balance_flags: tuple[str, ...]
    load_warnings: tuple[str, ...]

    @property
    def warning_count(self) -> int:
        return len(self.load_warnings) + len(self.duplicate_content) + len(self.balance_flags)

    def to_text(self) -> str:
        lines = []
        for split in SPLITS:
            per_class = self.counts.get(split, {})
            parts = " ".join(f"{name}={n}" for name, n in per_class.items())
            lines.append(f"{split}: {parts} | total {sum(per_class.values())}")
        lines.append(
            f"image dimensions: {self.min_width}x{self.min_height}"
            f" .. {self.max_width}x{self.max_height}")
        lines.append(f"duplicate ids: {len(self.duplicate_ids)}")
        for group in self.duplicate_content:
            lines.append(f"warning: identical file content: {', '.join(group)}")
        for split in self.balance_flags:
            lines.append(
                f"warning: split {split!r} is imbalanced"
                f" (minority/majority ratio {self.balance[split]:.2f})")
        for w in self.load_warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines)

    def to_record(self) -> dict:
        return {
            "counts": {s: dict(c) for s, c in self.counts.items()},
            "min_width": self.min_width,
            "max_width": self.max_width,
            "min_height": self.min_height,
            "max_height": self.max_height,
            "duplicate_ids": list(self.duplicate_ids),
            "duplicate_content": [list(g) for g in self.duplicate_content],
            "balance": dict(self.balance),
            "balance_flags": list(self.balance_flags),
            "load_warnings": list(self.load_warnings),
            "warning_count": self.warning_count,
        }


def load_dataset(root: str | Path, class_order: Sequence[str] | None = None) -> Dataset:
    """Build a Dataset from the on-disk layout, skipping undecodable files.

    Skipped files are reported in ``Dataset.load_warnings`` and surface in
    the validation report; decodable-file problems never abort a load.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetStructureError(f"dataset root {root} is not a directory")
    split_classes: dict[str, list[str]] = {}
    for split in SPLITS:
        split_dir = root / split
        if not split_dir.is_dir():
            raise DatasetStructureError(f"missing split directory {split_dir}")
        names = sorted(d.name for d in split_dir.iterdir() if d.is_dir())
        if len(names) != 2:
            raise TaskArityError(
                f"split {split!r} must contain exactly two class directories,"
                f" found {len(names)}: {names}")
        split_classes[split] = names

    folded = {s: [n.casefold() for n in names] for s, names in split_classes.items()}
    if folded["train"] != folded["test"]:
        raise TaskArityError(
            f"train/test class directories disagree:"
            f" {split_classes['train']} vs {split_classes['test']}")

    task_names = list(split_classes["train"])
    if class_order is not None:
        wanted = [n.casefold() for n in class_order]
        if sorted(wanted) != sorted(folded["train"]):
            raise TaskArityError(
                f"class_order {list(class_order)} does not match directories {task_names}")
        task_names.sort(key=lambda n: wanted.index(n.casefold()))
    task = (ClassLabel(task_names[0]), ClassLabel(task_names[1]))

    items: list[LabeledImage] = []
    warnings: list[str] = []
    for split in SPLITS:
        for class_name in split_classes[split]:
            label = task[0] if task[0].matches_name(class_name) else task[1]
            class_dir = root / split / class_name
            for path in sorted(class_dir.iterdir()):
                if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
                    continue
                try:
                    width, height = _probe_image(path)
                except Exception as exc:
                    warnings.append(
                        f"skipped undecodable file {split}/{class_name}/{path.name}"
                        f" ({type(exc).__name__})")
                    continue
                items.append(LabeledImage(
                    id=f"{split}/{class_name}/{path.name}",
                    path=path,
                    label=label,
                    split=split,
                    width=width,
                    height=height,
                ))
    return Dataset(task=task, items=tuple(items), load_warnings=tuple(warnings))


def _probe_image(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        size = im.size
        im.verify()
    return size


def validate(dataset: Dataset) -> ValidationReport:
    """Report-only integrity pass: counts, dimensions, duplicates, balance."""
    widths = [i.width for i in dataset.items] or [0]
    heights = [i.height for i in dataset.items] or [0]

    seen_ids: set[str] = set()
    dup_ids: list[str] = []
    for item in dataset.items:
        if item.id in seen_ids:
            dup_ids.append(item.id)
        seen_ids.add(item.id)

    by_digest: dict[str, list[str]] = defaultdict(list)
    for item in dataset.items:
        by_digest[hashlib.sha256(item.path.read_bytes()).hexdigest()].append(item.id)
    dup_content = tuple(tuple(ids) for ids in by_digest.values() if len(ids) > 1)

    balance: dict[str, float] = {}
    flags: list[str] = []
    for split in SPLITS:
        per_class = dataset.counts.get(split, {})
        values = sorted(per_class.values())
        if len(values) < 2 or values[1] == 0:
            ratio = 0.0
        else:
            ratio = values[0] / values[1]
        balance[split] = ratio
        if ratio < BALANCE_WARN_RATIO:
            flags.append(split)

    return ValidationReport(
        counts=dataset.counts,
        min_width=min(widths),
        max_width=max(widths),
        min_height=min(heights),
        max_height=max(heights),
        duplicate_ids=tuple(dup_ids),
        duplicate_content=dup_content,
        balance=balance,
        balance_flags=tuple(flags),
        load_warnings=dataset.load_warnings,
    )


def stratified_sample(
    dataset: Dataset,
    split: str,
    k_per_class: int,
    seed: int,
) -> list[LabeledImage]:
    """Draw k items per class, first-class block first, reproducibly by seed."""
    if k_per_class < 0:
        raise SamplingError("k_per_class must be non-negative")
    rng = random.Random(seed)
    picked: list[LabeledImage] = []
    for label in dataset.task:
        pool = sorted(dataset.class_items(split, label), key=lambda item: item.id)
        if len(pool) < k_per_class:
            raise SamplingError(
                f"class {label.name!r} has {len(pool)} items in split {split!r},"
                f" {k_per_class} requested (short by {k_per_class - len(pool)})")
        picked.extend(rng.sample(pool, k_per_class))
    return picked
