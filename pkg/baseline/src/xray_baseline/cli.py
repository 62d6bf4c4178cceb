"""Command-line entry point mirroring BaselineConfig."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import BACKBONES, MODES, BaselineConfig, DatasetError, SetupError
from .trainer import train_and_predict


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xray-baseline",
        description="Fine-tune CNN baselines on a two-class image tree and"
                    " emit prediction CSVs.")
    parser.add_argument("--data", type=Path, required=True,
                        help="dataset root (train/test class directories)")
    parser.add_argument("--out", type=Path, required=True,
                        help="directory for prediction CSVs")
    parser.add_argument("--backbone", choices=BACKBONES, default="resnet18")
    parser.add_argument("--mode", choices=MODES, default="full")
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--batch-size", type=int, default=2)
    parser.add_argument("--lr", type=float, default=None,
                        help="initial learning rate (default per backbone)")
    parser.add_argument("--seeds", type=int, nargs="+", default=None,
                        help="random seeds (fewshot default: 0..4)")
    parser.add_argument("--shots", type=int, default=3,
                        help="training images per class in fewshot mode")
    parser.add_argument("--no-pretrained", action="store_true",
                        help="random init instead of pretrained weights"
                             " (testing only)")
    parser.add_argument("--workers", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = BaselineConfig(
        backbone=args.backbone,
        mode=args.mode,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        shots_per_class=args.shots,
        seeds=tuple(args.seeds) if args.seeds else (),
        pretrained=not args.no_pretrained,
        num_workers=args.workers,
    )
    try:
        train_and_predict(config, args.data, args.out)
    except (SetupError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
