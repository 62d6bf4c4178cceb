"""Synthetic dataset trees for baseline tests."""

from __future__ import annotations

from pathlib import Path

import pytest
from PIL import Image


def build_tree(root: Path, train: tuple[int, int], test: tuple[int, int],
               classes: tuple[str, str] = ("COVID", "Normal"),
               size: tuple[int, int] = (48, 64)) -> Path:
    serial = 0
    for split, counts in (("train", train), ("test", test)):
        for class_name, count in zip(classes, counts):
            directory = root / split / class_name
            directory.mkdir(parents=True, exist_ok=True)
            for i in range(count):
                serial += 1
                shade = 40 if class_name == classes[0] else 200
                Image.new("RGB", size, (shade, serial % 256, 90)).save(
                    directory / f"{split[0]}{i:03d}.png")
    return root


@pytest.fixture()
def tiny_tree(tmp_path: Path) -> Path:
    return build_tree(tmp_path / "data", train=(4, 4), test=(3, 2))
