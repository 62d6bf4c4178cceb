"""Dataset access for the baselines.

Reads the same on-disk layout as the evaluation harness
(``<root>/{train,test}/<class>/*.png|jpg|jpeg``) and reproduces its seeded
stratified-sampling convention (items sorted by id, ``random.Random(seed)
.sample`` per class, first class's block first) so few-shot selections
line up across both packages.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import torch
from PIL import Image
from torch.utils.data import Dataset
from torchvision import transforms

from .config import BaselineConfig, DatasetError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]


@dataclass(frozen=True)
class Item:
    id: str
    path: Path
    label: str
    split: str


@dataclass(frozen=True)
class LayoutIndex:
    classes: tuple[str, str]   # lexical order; index is the training target
    items: tuple[Item, ...]

    def split_items(self, split: str) -> list[Item]:
        return [item for item in self.items if item.split == split]

    def class_items(self, split: str, label: str) -> list[Item]:
        return [item for item in self.items
                if item.split == split and item.label == label]

    def target(self, label: str) -> int:
        return self.classes.index(label)


def scan_layout(root: str | Path) -> LayoutIndex:
    root = Path(root)
    split_classes: dict[str, list[str]] = {}
    for split in ("train", "test"):
        split_dir = root / split
        if not split_dir.is_dir():
            raise DatasetError(f"missing split directory {split_dir}")
        names = sorted(d.name for d in split_dir.iterdir() if d.is_dir())
        if len(names) != 2:
            raise DatasetError(
                f"split {split!r} must hold exactly two class directories,"
                f" found {names}")
        split_classes[split] = names
    if ([n.casefold() for n in split_classes["train"]]
            != [n.casefold() for n in split_classes["test"]]):
        raise DatasetError(
            f"train/test class directories disagree: "
            f"{split_classes['train']} vs {split_classes['test']}")

    items: list[Item] = []
    for split, names in split_classes.items():
        for class_name in names:
            for path in sorted((root / split / class_name).iterdir()):
                if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES:
                    items.append(Item(
                        id=f"{split}/{class_name}/{path.name}",
                        path=path, label=class_name, split=split))
    return LayoutIndex(classes=tuple(split_classes["train"]), items=tuple(items))


def stratified_sample(index: LayoutIndex, split: str, k_per_class: int,
                      seed: int) -> list[Item]:
    """Shared convention: per-class pools sorted by id, one Random(seed)."""
    rng = random.Random(seed)
    picked: list[Item] = []
    for label in index.classes:
        pool = sorted(index.class_items(split, label), key=lambda item: item.id)
        if len(pool) < k_per_class:
            raise DatasetError(
                f"class {label!r} has {len(pool)} items in {split!r},"
                f" {k_per_class} requested")
        picked.extend(rng.sample(pool, k_per_class))
    return picked


def train_transform(config: BaselineConfig) -> transforms.Compose:
    return transforms.Compose([
        transforms.Grayscale(num_output_channels=3),
        transforms.Resize(256),
        transforms.RandomRotation(config.rotation_degrees),
        transforms.CenterCrop(config.crop_size),
        transforms.ToTensor(),
        transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
    ])


def eval_transform(config: BaselineConfig) -> transforms.Compose:
    return transforms.Compose([
        transforms.Grayscale(num_output_channels=3),
        transforms.Resize(256),
        transforms.CenterCrop(config.crop_size),
        transforms.ToTensor(),
        transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
    ])


class XrayDataset(Dataset):
    def __init__(self, index: LayoutIndex, items: list[Item], transform):
        self.index = index
        self.items = items
        self.transform = transform

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, position: int):
        item = self.items[position]
        with Image.open(item.path) as image:
            tensor = self.transform(image.convert("RGB"))
        return tensor, torch.tensor(self.index.target(item.label),
                                    dtype=torch.long)
