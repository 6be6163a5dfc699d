"""Flat ``key = value`` experiment configuration."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..augment import AugmentPolicy


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class TrainConfig:
    # data
    dataset: str = "molecules"  # molecules | mnist
    data_dir: str = "."
    task: str = "classify"  # classify | regress
    metric: str = "roc_auc"  # accuracy | roc_auc | rmse
    id_column: str = "id"
    target_column: str = "target"
    split: str = "random"  # random | from-file
    split_file: str = ""
    fractions: tuple = (0.8, 0.1, 0.1)
    self_loops: bool = False
    radius: int = 1
    n_train: int = 5000
    n_valid: int = 1000
    n_test: int = 1000
    # model
    mode: str = "spatial"  # spatial | vanilla | pos_concat
    dims: list = field(default_factory=lambda: [32, 32])
    filters: list = field(default_factory=lambda: [4, 4])
    # optimisation
    optimizer: str = "adam"  # adam | sgd
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 50
    patience: int = 20
    seed: int = 0
    # augmentation
    rotate: bool = False
    rotation_dim: int = 3
    translate_sigma: float = 0.0
    conformer_pool_size: int = 0
    test_time_samples: int = 1
    # outputs
    metrics_csv: str = ""
    checkpoint: str = ""

    _CONVERTERS = {
        "dims": _ints,
        "filters": _ints,
        "fractions": _floats,
    }

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in self._CONVERTERS:
                setattr(self, f.name, self._CONVERTERS[f.name](value))
            elif f.type == "bool":
                setattr(self, f.name, _bool(value))
            elif f.type == "int":
                setattr(self, f.name, int(value))
            elif f.type == "float":
                setattr(self, f.name, float(value))
            elif f.type == "str":
                setattr(self, f.name, str(value))
        self.validate()

    def validate(self) -> None:
        if self.dataset not in ("molecules", "mnist"):
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.task not in ("classify", "regress"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.metric not in ("accuracy", "roc_auc", "rmse"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.mode not in ("spatial", "vanilla", "pos_concat"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if len(self.dims) != len(self.filters) or not self.dims:
            raise ValueError("dims and filters need one entry per layer")
        if min(self.dims) < 1 or min(self.filters) < 1:
            raise ValueError("layer widths and filter counts must be positive")
        # lr = 0 is allowed as a frozen-parameter probe
        if self.lr < 0 or self.eps <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("lr, eps, batch_size and epochs must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        self.policy  # validates augmentation fields

    @property
    def policy(self) -> AugmentPolicy:
        return AugmentPolicy(
            rotate=self.rotate,
            rotation_dim=self.rotation_dim,
            translate_sigma=self.translate_sigma,
            conformer_pool_size=self.conformer_pool_size,
            test_time_samples=self.test_time_samples,
        )

    def replace(self, **changes) -> TrainConfig:
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_text(cls, text: str, base_dir=None) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = value
        cfg = cls(**values)
        if base_dir is not None:
            for name in ("data_dir", "split_file", "metrics_csv", "checkpoint"):
                value = getattr(cfg, name)
                if value and not Path(value).is_absolute():
                    setattr(cfg, name, str(Path(base_dir) / value))
        return cfg

    @classmethod
    def from_file(cls, path) -> TrainConfig:
        path = Path(path)
        return cls.from_text(path.read_text(), base_dir=path.parent)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"
