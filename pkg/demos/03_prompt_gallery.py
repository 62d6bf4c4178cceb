#!/usr/bin/env python3
"""Render all seven prompting strategies for a toy task and print them.

Shows the exact text a provider receives, the attachment count, and the
visible-index -> item-id map the parser scores against.
"""

from pathlib import Path

from PIL import Image

from icl_xray import (Strategy, StrategyKind, load_dataset, render_prompt,
                      stratified_sample)
from icl_xray.runner import build_figures

ROOT = Path(__file__).parent / "demo_output" / "dataset"


def ensure_tree() -> Path:
    if not ROOT.exists():
        serial = 0
        for split, counts in (("train", (6, 6)), ("test", (4, 3))):
            for class_name, count in zip(("COVID", "Normal"), counts):
                directory = ROOT / split / class_name
                directory.mkdir(parents=True, exist_ok=True)
                for i in range(count):
                    serial += 1
                    Image.new("RGB", (64, 80), (serial * 5 % 256, 90, 120)).save(
                        directory / f"{split[0]}{i:03d}.png")
    return ROOT


def main() -> None:
    dataset = load_dataset(ensure_tree())
    for kind in StrategyKind:
        reasoning = None
        if kind in (StrategyKind.ICL_R1, StrategyKind.ICL_R2):
            reasoning = "hazy bilateral opacities"
        strategy = Strategy.of(kind, reasoning_text=reasoning)
        examples = stratified_sample(dataset, "train",
                                     strategy.shots_per_class, seed=11)
        queries = sorted(dataset.split_items("test"),
                         key=lambda i: i.id)[:strategy.queries_per_request]
        figures = build_figures(strategy, examples, queries)
        package = render_prompt(strategy, dataset.task, examples, queries, figures)

        print("=" * 72)
        print(f"{kind.value}  |  attachments: {len(package.attachments)}"
              f"  |  query map: {list(package.query_index_map)}")
        print("-" * 72)
        print(package.text)
        if package.deviation_notes:
            for note in package.deviation_notes:
                print(f"[note] {note}")
        print()


if __name__ == "__main__":
    main()
