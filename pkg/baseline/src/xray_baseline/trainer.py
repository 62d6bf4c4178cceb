"""Fine-tune the CNN baselines and emit per-seed prediction CSVs.

The CSV (``item_id,true_label,predicted_label``, one row per test item) is
the hand-off surface to the evaluation harness, which can score it with
its own metrics module.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader
from torchvision import models

from .config import BaselineConfig, SetupError
from .data import (LayoutIndex, XrayDataset, eval_transform, scan_layout,
                   stratified_sample, train_transform)

CSV_HEADER = ["item_id", "true_label", "predicted_label"]


@dataclass(frozen=True)
class SeedResult:
    seed: int
    csv_path: Path
    accuracy: float
    per_class: dict[str, dict[str, float]]


def build_model(backbone: str, pretrained: bool) -> nn.Module:
    """Backbone with a fresh 2-way classification head."""
    weights = None
    if pretrained:
        try:
            if backbone == "resnet18":
                weights = models.ResNet18_Weights.IMAGENET1K_V1
            else:
                weights = models.VGG16_Weights.IMAGENET1K_V1
            # touching the weight enum does not download; construction does
            model = (models.resnet18(weights=weights) if backbone == "resnet18"
                     else models.vgg16(weights=weights))
        except Exception as exc:
            raise SetupError(
                f"pretrained weights for {backbone} unavailable: {exc}") from exc
    else:
        model = (models.resnet18(weights=None) if backbone == "resnet18"
                 else models.vgg16(weights=None))
    if backbone == "resnet18":
        model.fc = nn.Linear(model.fc.in_features, 2)
    else:
        model.classifier[6] = nn.Linear(model.classifier[6].in_features, 2)
    return model


def _train(model: nn.Module, dataset: XrayDataset,
           config: BaselineConfig, seed: int) -> None:
    if config.epochs == 0 or len(dataset) == 0:
        return
    generator = torch.Generator().manual_seed(seed)
    loader = DataLoader(dataset, batch_size=config.batch_size, shuffle=True,
                        generator=generator, num_workers=config.num_workers)
    optimizer = torch.optim.SGD(model.parameters(), lr=config.learning_rate,
                                momentum=config.momentum,
                                weight_decay=config.weight_decay)
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=list(config.lr_decay_epochs),
        gamma=1.0 / config.lr_decay_factor)
    criterion = nn.CrossEntropyLoss()

    model.train()
    for _epoch in range(config.epochs):
        for inputs, targets in loader:
            optimizer.zero_grad()
            loss = criterion(model(inputs), targets)
            loss.backward()
            optimizer.step()
        scheduler.step()


@torch.no_grad()
def _predict(model: nn.Module, index: LayoutIndex,
             config: BaselineConfig) -> list[tuple[str, str, str]]:
    test_items = sorted(index.split_items("test"), key=lambda item: item.id)
    dataset = XrayDataset(index, test_items, eval_transform(config))
    loader = DataLoader(dataset, batch_size=max(8, config.batch_size),
                        shuffle=False, num_workers=config.num_workers)
    model.eval()
    picks: list[int] = []
    for inputs, _targets in loader:
        picks.extend(model(inputs).argmax(dim=1).tolist())
    return [(item.id, item.label, index.classes[pick])
            for item, pick in zip(test_items, picks)]


def evaluate_rows(rows: list[tuple[str, str, str]],
                  classes: tuple[str, str]) -> tuple[float, dict]:
    """Accuracy and per-class precision/recall/F1 from prediction rows."""
    correct = sum(1 for _, truth, predicted in rows if truth == predicted)
    accuracy = correct / len(rows) if rows else 0.0
    per_class = {}
    for name in classes:
        tp = sum(1 for _, t, p in rows if t == name and p == name)
        fp = sum(1 for _, t, p in rows if t != name and p == name)
        fn = sum(1 for _, t, p in rows if t == name and p != name)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class[name] = {"precision": precision, "recall": recall, "f1": f1}
    return accuracy, per_class


def _write_csv(path: Path, rows: list[tuple[str, str, str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)


def train_and_predict(config: BaselineConfig, dataset_root: str | Path,
                      out_dir: str | Path) -> list[SeedResult]:
    """One training run and prediction CSV per seed; prints mean accuracy."""
    index = scan_layout(dataset_root)
    out_dir = Path(out_dir)
    results: list[SeedResult] = []

    for seed in config.run_seeds:
        torch.manual_seed(seed)
        if config.mode == "fewshot":
            train_items = stratified_sample(index, "train",
                                            config.shots_per_class, seed)
        else:
            train_items = sorted(index.split_items("train"),
                                 key=lambda item: item.id)
        model = build_model(config.backbone, config.pretrained)
        _train(model, XrayDataset(index, train_items, train_transform(config)),
               config, seed)
        rows = _predict(model, index, config)
        accuracy, per_class = evaluate_rows(rows, index.classes)
        csv_path = out_dir / (f"predictions_{config.backbone}_{config.mode}"
                              f"_seed{seed}.csv")
        _write_csv(csv_path, rows)
        print(f"seed {seed}: accuracy {accuracy:.4f} -> {csv_path}")
        results.append(SeedResult(seed=seed, csv_path=csv_path,
                                  accuracy=accuracy, per_class=per_class))

    mean_accuracy = sum(r.accuracy for r in results) / len(results)
    print(f"mean accuracy over {len(results)} seed(s): {mean_accuracy:.4f}")
    return results


def read_prediction_csv(path: str | Path) -> list[tuple[str, str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return [(row[0], row[1], row[2]) for row in reader]
