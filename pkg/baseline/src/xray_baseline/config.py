"""Training configuration for the CNN baselines."""

from __future__ import annotations

from dataclasses import dataclass


class SetupError(RuntimeError):
    """Pretrained weights or other training prerequisites unavailable."""


class DatasetError(RuntimeError):
    """Dataset directory tree does not match the expected layout."""


BACKBONES = ("resnet18", "vgg16")
MODES = ("full", "fewshot")

# initial learning rate per backbone; tuned for convergence at batch size 2
DEFAULT_LR = {"resnet18": 0.1, "vgg16": 0.001}

FEWSHOT_DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class BaselineConfig:
    backbone: str = "resnet18"
    mode: str = "full"
    epochs: int = 20
    batch_size: int = 2
    lr: float | None = None          # None -> backbone default
    lr_decay_epochs: tuple[int, ...] = (10, 15)
    lr_decay_factor: float = 5.0     # divide at each decay epoch
    momentum: float = 0.9            # unstated upstream; documented assumption
    weight_decay: float = 0.0
    rotation_degrees: float = 15.0
    crop_size: int = 224
    shots_per_class: int = 3
    seeds: tuple[int, ...] = ()      # empty -> mode default
    pretrained: bool = True          # False is a test/debug escape hatch
    num_workers: int = 0

    def __post_init__(self) -> None:
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.lr_decay_factor <= 0:
            raise ValueError("lr_decay_factor must be positive")

    @property
    def learning_rate(self) -> float:
        return DEFAULT_LR[self.backbone] if self.lr is None else self.lr

    @property
    def run_seeds(self) -> tuple[int, ...]:
        if self.seeds:
            return self.seeds
        return FEWSHOT_DEFAULT_SEEDS if self.mode == "fewshot" else (0,)
