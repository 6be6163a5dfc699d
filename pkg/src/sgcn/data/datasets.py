"""Assembling graph datasets from files on disk."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..augment import read_conformer_pool
from ..graph import SpatialGraph, build_grid_graph
from .idx import read_idx_images, read_idx_labels
from .molecules import featurize
from .sdf import read_sdf
from .tables import DatasetSplit, load_labels, make_split

log = logging.getLogger(__name__)

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class Dataset:
    graphs: list[SpatialGraph]
    split: DatasetSplit
    task: str = "classify"
    n_classes: int = 2
    pools: list | None = None
    name: str = ""

    def subset(self, part: str) -> list[int]:
        return list(getattr(self.split, part))


def _find(data_dir: Path, stem: str) -> Path:
    for candidate in (data_dir / stem, data_dir / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{data_dir}: neither {stem} nor {stem}.gz found")


def load_mnist(data_dir, n_train=5000, n_valid=1000, n_test=1000, radius=1) -> Dataset:
    """Grid graphs of MNIST digits.

    Train and validation digits are the first ``n_train + n_valid`` images of
    the training file; test digits come from the test file.
    """
    data_dir = Path(data_dir)
    train_x = read_idx_images(_find(data_dir, MNIST_FILES["train_images"]))
    train_y = read_idx_labels(_find(data_dir, MNIST_FILES["train_labels"]))
    test_x = read_idx_images(_find(data_dir, MNIST_FILES["test_images"]))
    test_y = read_idx_labels(_find(data_dir, MNIST_FILES["test_labels"]))
    if n_train + n_valid > len(train_x) or n_test > len(test_x):
        raise ValueError(
            f"requested {n_train}+{n_valid} train/valid and {n_test} test digits, "
            f"files hold {len(train_x)} and {len(test_x)}"
        )
    images = np.concatenate([train_x[:n_train + n_valid], test_x[:n_test]])
    labels = np.concatenate([train_y[:n_train + n_valid], test_y[:n_test]])
    graphs = [build_grid_graph(img, radius, label=int(y)) for img, y in zip(images, labels)]
    split = DatasetSplit(
        train=list(range(n_train)),
        valid=list(range(n_train, n_train + n_valid)),
        test=list(range(n_train + n_valid, len(graphs))),
        kind="from-file",
    )
    return Dataset(graphs, split, task="classify", n_classes=10, name="mnist")


def load_molecules(data_dir, id_column="id", target_column="target", task="classify",
                   split="random", split_file="", fractions=(0.8, 0.1, 0.1), seed=0,
                   self_loops=False, sdf_name="molecules.sdf", labels_name="labels.csv",
                   conformers_name="conformers.txt") -> Dataset:
    """Molecules from ``molecules.sdf`` joined to ``labels.csv`` by record name.

    Records whose name is not in the table fall back to their position in the
    file (as a string id). Unlabelled records are dropped. An optional
    ``conformers.txt`` supplies per-molecule coordinate pools.
    """
    data_dir = Path(data_dir)
    records = read_sdf(data_dir / sdf_name)
    labels = load_labels(data_dir / labels_name, id_column, target_column)
    pools_path = data_dir / conformers_name
    pool_table = read_conformer_pool(pools_path) if pools_path.exists() else None

    graphs, pools, unlabelled = [], [], 0
    for order, rec in enumerate(records):
        key = rec.name if rec.name in labels else str(order)
        if key not in labels:
            unlabelled += 1
            continue
        value = labels[key]
        label = int(value) if task == "classify" else float(value)
        graph = featurize(rec, self_loops=self_loops, label=label)
        graph.meta["id"] = key
        graphs.append(graph)
        if pool_table is not None:
            pool = pool_table.get(rec.name, pool_table.get(key))
            if pool is None:
                raise ValueError(f"no conformer pool for molecule {rec.name!r}")
            if graph.positions is None and pool:
                # 2-d record: geometry comes from the first precomputed conformer
                graphs[-1] = graph = graph.replace(positions=pool[0])
            pools.append(pool)
    if unlabelled:
        log.warning("%s: %d records without a label were dropped", data_dir, unlabelled)
    if not graphs:
        raise ValueError(f"{data_dir}: no labelled molecules")
    dsplit = make_split(len(graphs), split, seed, fractions,
                        path=(data_dir / split_file) if split_file else None)
    n_classes = (max(g.label for g in graphs) + 1) if task == "classify" else 1
    return Dataset(graphs, dsplit, task=task, n_classes=max(2, n_classes),
                   pools=pools if pool_table is not None else None, name=data_dir.name)


def load_dataset(config) -> Dataset:
    if config.dataset == "mnist":
        return load_mnist(config.data_dir, config.n_train, config.n_valid, config.n_test,
                          config.radius)
    return load_molecules(
        config.data_dir, config.id_column, config.target_column, config.task,
        config.split, config.split_file, config.fractions, config.seed, config.self_loops,
    )
