#!/usr/bin/env python3
"""Walk through dataset loading, validation and seeded sampling.

Builds a small synthetic two-class image tree under ./demo_output, loads
it, prints the validation report and draws a few stratified samples.
"""

from pathlib import Path

from PIL import Image

from icl_xray import load_dataset, stratified_sample, validate

ROOT = Path(__file__).parent / "demo_output" / "dataset"


def build_demo_tree() -> Path:
    serial = 0
    for split, counts in (("train", (12, 9)), ("test", (5, 4))):
        for class_name, count in zip(("COVID", "Normal"), counts):
            directory = ROOT / split / class_name
            directory.mkdir(parents=True, exist_ok=True)
            for i in range(count):
                serial += 1
                Image.new("RGB", (64, 80), (serial * 3 % 256, 90, 120)).save(
                    directory / f"{split[0]}{i:03d}.png")
    return ROOT


def main() -> None:
    root = build_demo_tree()
    print(f"dataset tree at {root}\n")

    dataset = load_dataset(root)
    print("validation report:")
    print(validate(dataset).to_text())

    print("\nstratified 3-per-class samples (train split):")
    for seed in (0, 1, 42):
        sample = stratified_sample(dataset, "train", 3, seed=seed)
        print(f"  seed {seed:>2}: {[item.id.split('/')[-1] for item in sample]}")

    print("\nsame seed twice is identical:")
    a = stratified_sample(dataset, "train", 3, seed=42)
    b = stratified_sample(dataset, "train", 3, seed=42)
    print(f"  {[i.id for i in a] == [i.id for i in b]}")


if __name__ == "__main__":
    main()
