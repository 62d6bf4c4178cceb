"""Shared fixtures: synthetic image trees and scripted-response helpers."""

from __future__ import annotations

from pathlib import Path

import pytest
from PIL import Image

from icl_xray.dataset import Dataset, load_dataset

CLASSES = ("COVID", "Normal")


def make_image(path: Path, size: tuple[int, int] = (24, 32),
               color: tuple[int, int, int] = (90, 90, 90)) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", size, color).save(path)
    return path


def build_tree(root: Path,
               train: tuple[int, int],
               test: tuple[int, int],
               classes: tuple[str, str] = CLASSES,
               size: tuple[int, int] = (24, 32)) -> Path:
    """Synthetic dataset tree; every file gets distinct pixel content."""
    serial = 0
    for split, counts in (("train", train), ("test", test)):
        for class_name, count in zip(classes, counts):
            for i in range(count):
                serial += 1
                make_image(root / split / class_name / f"{split[0]}{i:03d}.png",
                           size=size,
                           color=(serial % 256, (serial * 7) % 256, 60))
    return root


@pytest.fixture(scope="session")
def paper_tree(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Tree with the benchmark dataset's counts: 111/70 train, 26/20 test."""
    root = tmp_path_factory.mktemp("paper_dataset")
    return build_tree(root, train=(111, 70), test=(26, 20))


@pytest.fixture(scope="session")
def paper_dataset(paper_tree: Path) -> Dataset:
    return load_dataset(paper_tree)


@pytest.fixture()
def small_tree(tmp_path: Path) -> Path:
    return build_tree(tmp_path / "small", train=(5, 5), test=(3, 2))


@pytest.fixture()
def small_dataset(small_tree: Path) -> Dataset:
    return load_dataset(small_tree)


def correct_label(item_id: str) -> str:
    """Ground-truth class name encoded in the item id path."""
    return item_id.split("/")[1]
