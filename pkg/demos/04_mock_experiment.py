#!/usr/bin/env python3
"""Run a complete offline experiment against the scripted mock provider.

Scripts responses that realize a known confusion matrix (tp=20 fp=4 fn=6
tn=16 over a 26/20 test split), runs the zero-shot strategy end to end,
re-scores the manifest offline, and writes the summary CSV.
"""

from pathlib import Path

from PIL import Image

from icl_xray import (RunConfig, StrategyKind, load_dataset, mock_provider,
                      run_experiment, score_manifest, write_summary_csv)
from icl_xray.runner import plan_requests

BASE = Path(__file__).parent / "demo_output"
ROOT = BASE / "benchmark_sized_dataset"


def build_tree() -> Path:
    serial = 0
    for split, counts in (("train", (111, 70)), ("test", (26, 20))):
        for class_name, count in zip(("COVID", "Normal"), counts):
            directory = ROOT / split / class_name
            directory.mkdir(parents=True, exist_ok=True)
            for i in range(count):
                serial += 1
                Image.new("RGB", (32, 40), (serial % 256, 80, 100)).save(
                    directory / f"{split[0]}{i:03d}.png")
    return ROOT


def scripted_responses(config, dataset) -> list[str]:
    tallies = {"COVID": 0, "Normal": 0}
    script = []
    for plan in plan_requests(config, dataset):
        (item_id,) = plan.query_ids
        truth = item_id.split("/")[1]
        tallies[truth] += 1
        if truth == "COVID":
            answer = "COVID" if tallies[truth] <= 20 else "Normal"
        else:
            answer = "COVID" if tallies[truth] <= 4 else "Normal"
        script.append(f"{answer}\nScripted demo explanation.")
    return script


def main() -> None:
    dataset = load_dataset(build_tree())
    config = RunConfig(dataset_root=ROOT, strategy=StrategyKind.NAIVE,
                       seed=7, out_dir=BASE / "runs")
    script = scripted_responses(config, dataset)

    manifest = run_experiment(config, provider=mock_provider(script))
    print(f"manifest: {manifest.path}")
    print(manifest.metrics.to_text())

    result = score_manifest(manifest.path)
    print(f"\noffline re-score matches embedded report:"
          f" {result.matches_embedded}")

    out_csv = write_summary_csv([manifest.path], BASE / "summary.csv")
    print(f"\nsummary CSV: {out_csv}")
    print(out_csv.read_text(encoding="utf-8").strip())


if __name__ == "__main__":
    main()
