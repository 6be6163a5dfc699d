"""Label tables and train/valid/test splits."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

SECTIONS = ("train", "valid", "test")


class LabelTable(dict):
    """``id -> float`` with counts of what was dropped while loading."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.missing = 0
        self.rejected = 0
        self.duplicates = 0


def load_labels(path, id_column: str, target_column: str) -> LabelTable:
    """Read ``id -> target`` from a CSV with a header row.

    Empty targets are dropped, non-numeric ones rejected, and a repeated id
    keeps its last value; each event is counted and logged.
    """
    table = LabelTable()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for col in (id_column, target_column):
            if col not in header:
                raise KeyError(f"{path}: column {col!r} not in header {header}")
        for row in reader:
            key = (row[id_column] or "").strip()
            raw = (row[target_column] or "").strip()
            if not raw:
                table.missing += 1
                continue
            try:
                value = float(raw)
            except ValueError:
                table.rejected += 1
                continue
            if not math.isfinite(value):
                table.rejected += 1
                continue
            if key in table:
                table.duplicates += 1
                log.warning("%s: duplicate id %r, keeping the last value", path, key)
            table[key] = value
    if table.missing or table.rejected:
        log.warning(
            "%s: dropped %d rows without a label, rejected %d non-numeric targets",
            path, table.missing, table.rejected,
        )
    return table


@dataclass
class DatasetSplit:
    train: list[int]
    valid: list[int]
    test: list[int]
    seed: int | None = None
    kind: str = "random"

    def __post_init__(self):
        seen = set()
        for name in SECTIONS:
            part = set(getattr(self, name))
            if part & seen:
                raise ValueError("split sections overlap")
            seen |= part

    def check_covers(self, n: int) -> None:
        if sorted(self.train + self.valid + self.test) != list(range(n)):
            raise ValueError(f"split does not cover exactly 0..{n - 1}")


def make_split(n: int, kind: str = "random", seed: int = 0,
               fractions=(0.8, 0.1, 0.1), path=None) -> DatasetSplit:
    """Seeded shuffle cut into contiguous train/valid/test parts, or read from file."""
    if kind == "from-file":
        if path is None:
            raise ValueError("from-file split needs a path")
        split = read_split(path)
        split.check_covers(n)
        return split
    if kind != "random":
        raise ValueError(f"unknown split kind {kind!r}")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ValueError(f"split fractions must be three non-negatives summing to 1, got {fractions}")
    order = np.random.default_rng(seed).permutation(n).tolist()
    n_train = int(round(fractions[0] * n))
    n_valid = min(int(round(fractions[1] * n)), n - n_train)
    return DatasetSplit(
        train=order[:n_train],
        valid=order[n_train:n_train + n_valid],
        test=order[n_train + n_valid:],
        seed=seed,
        kind="random",
    )


def write_split(path, split: DatasetSplit) -> None:
    lines = []
    for name in SECTIONS:
        lines.append(f"# {name}")
        lines.extend(str(i) for i in getattr(split, name))
    Path(path).write_text("\n".join(lines) + "\n")


def read_split(path) -> DatasetSplit:
    """Sections start with ``# train``, ``# valid``, ``# test``; one index per line."""
    parts = {name: [] for name in SECTIONS}
    current = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            current = line[1:].strip()
            if current not in parts:
                raise ValueError(f"{path}:{lineno}: unknown section {current!r}")
            continue
        if current is None:
            raise ValueError(f"{path}:{lineno}: index before any section header")
        parts[current].append(int(line))
    return DatasetSplit(**parts, seed=None, kind="from-file")
