"""Training loop, evaluation and metric reports."""
from __future__ import annotations

import copy
import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..augment import AugmentPolicy, augment_graph, sample_mean
from ..graph import batch
from ..layers import LayerMode, SgcnModel
from ..tensor import backward
from .config import TrainConfig
from .losses import cross_entropy, mse
from .metrics import accuracy, rmse, roc_auc
from .optim import SGD, Adam

log = logging.getLogger(__name__)

HIGHER_IS_BETTER = {"accuracy": True, "roc_auc": True, "rmse": False}
EVAL_BATCH = 256


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class MetricReport:
    metric: str
    rows: list = field(default_factory=list)  # (epoch, split, metric, value)
    best_epoch: int = 0
    best_valid: float = math.nan
    test: float = math.nan

    def add(self, epoch, split, metric, value):
        self.rows.append((epoch, split, metric, float(value)))

    def values(self, split, metric=None) -> list[float]:
        metric = metric or self.metric
        return [v for _, s, m, v in self.rows if s == split and m == metric]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "split", "metric", "value"])
        for epoch, split, metric, value in self.rows:
            writer.writerow([epoch, split, metric, repr(value)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_csv())


def input_dim(dataset, mode: LayerMode) -> int:
    g = dataset.graphs[0]
    return g.d + (g.t if mode is LayerMode.POS_CONCAT else 0)


def build_model(config: TrainConfig, dataset, rng) -> SgcnModel:
    mode = LayerMode(config.mode)
    t = dataset.graphs[0].t or 3
    n_out = dataset.n_classes if dataset.task == "classify" else 1
    model = SgcnModel.init(rng, t, input_dim(dataset, mode), config.dims, config.filters, n_out, mode)
    model.meta.update({"task": dataset.task, "metric": config.metric, "n_classes": dataset.n_classes})
    return model


def _targets(graphs, task, stats):
    if task == "classify":
        return np.array([g.label for g in graphs], dtype=np.int64)
    mean, std = stats
    return ((np.array([g.label for g in graphs], dtype=np.float64) - mean) / std).reshape(-1, 1)


def _loss(out, targets, task):
    return cross_entropy(out, targets) if task == "classify" else mse(out, targets)


def predict(model: SgcnModel, graphs, policy: AugmentPolicy | None = None, pools=None,
            samples: int = 1, rng=None) -> np.ndarray:
    """Raw outputs, averaged over ``samples`` augmented copies of every graph."""
    outputs = []
    for lo in range(0, len(graphs), EVAL_BATCH):
        chunk = graphs[lo:lo + EVAL_BATCH]
        chunk_pools = pools[lo:lo + EVAL_BATCH] if pools is not None else [None] * len(chunk)
        runs = []
        for _ in range(samples):
            if policy is None:
                copies = chunk
            else:
                copies = [augment_graph(g, policy, p, rng) for g, p in zip(chunk, chunk_pools)]
            runs.append(model(batch(copies)).data)
        outputs.append(sample_mean(np.stack(runs)))
    return np.concatenate(outputs)


def score(metric: str, outputs: np.ndarray, graphs, task: str, stats=None) -> float:
    labels = np.array([g.label for g in graphs])
    if metric == "accuracy":
        return accuracy(outputs, labels)
    if metric == "roc_auc":
        margin = outputs[:, 1] - outputs[:, 0] if outputs.shape[1] > 1 else outputs[:, 0]
        return roc_auc(margin, labels)
    if task == "regress" and stats is not None:
        outputs = outputs[:, 0] * stats[1] + stats[0]
    else:
        outputs = outputs[:, 0]
    return rmse(outputs, labels)


def evaluate(model, dataset, part, config: TrainConfig, stats=None, seed_offset=0) -> float:
    idx = dataset.subset(part)
    graphs = [dataset.graphs[i] for i in idx]
    pools = [dataset.pools[i] for i in idx] if dataset.pools is not None else None
    policy = config.policy
    samples = policy.test_time_samples
    rng = np.random.default_rng([config.seed, 7919, seed_offset])
    active = None if (policy.is_identity and not pools) else policy
    if active is None:
        samples = 1
    out = predict(model, graphs, active, pools, samples, rng)
    return score(config.metric, out, graphs, dataset.task, stats)


def resolve_geometry(config: TrainConfig, dataset):
    """Fall back to vanilla mode when some graph has no positions.

    Positions are then dropped everywhere and geometric augmentation is
    switched off, since neither can be applied consistently.
    """
    if all(g.positions is not None for g in dataset.graphs):
        return config, dataset
    if config.mode != "vanilla":
        log.warning("%s: some graphs have no coordinates; falling back to vanilla mode",
                    dataset.name or "dataset")
    graphs = [g.replace(positions=None) for g in dataset.graphs]
    dataset = replace(dataset, graphs=graphs, pools=None)
    config = config.replace(mode="vanilla", rotate=False, translate_sigma=0.0,
                            conformer_pool_size=0, test_time_samples=1)
    return config, dataset


def fit(config: TrainConfig, dataset, progress=None) -> tuple[MetricReport, SgcnModel]:
    """Train with the given config; return the report and the best-validation model."""
    config, dataset = resolve_geometry(config, dataset)
    seeds = np.random.SeedSequence(config.seed).spawn(3)
    init_rng, order_rng, aug_rng = (np.random.default_rng(s) for s in seeds)
    model = build_model(config, dataset, init_rng)
    params = model.parameters()
    names = model.parameter_names()
    if config.optimizer == "adam":
        opt = Adam(params, config.lr, (config.beta1, config.beta2), config.eps, names)
    else:
        opt = SGD(params, config.lr, names)

    train_idx = dataset.subset("train")
    if not train_idx:
        raise ValueError("empty training split")
    stats = None
    if dataset.task == "regress":
        y = np.array([dataset.graphs[i].label for i in train_idx], dtype=np.float64)
        stats = (float(y.mean()), float(y.std()) or 1.0)
        model.meta["target_mean"], model.meta["target_std"] = stats

    policy = config.policy
    train_aug = not policy.is_identity or dataset.pools is not None
    higher = HIGHER_IS_BETTER[config.metric]
    report = MetricReport(config.metric)
    best_state = copy.deepcopy([p.data for p in params])
    best_valid = -math.inf if higher else math.inf
    stale = 0
    has_valid = bool(dataset.subset("valid"))

    for epoch in range(1, config.epochs + 1):
        order = order_rng.permutation(train_idx)
        losses = []
        for lo in range(0, len(order), config.batch_size):
            ids = order[lo:lo + config.batch_size]
            graphs = [dataset.graphs[i] for i in ids]
            if train_aug:
                pools = [dataset.pools[i] for i in ids] if dataset.pools is not None else [None] * len(ids)
                graphs = [augment_graph(g, policy, p, aug_rng) for g, p in zip(graphs, pools)]
            out = model(batch(graphs))
            loss = _loss(out, _targets(graphs, dataset.task, stats), dataset.task)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            opt.zero_grad()
            backward(loss)
            opt.step()
            losses.append(value * len(ids))
        train_loss = sum(losses) / len(order)
        report.add(epoch, "train", "loss", train_loss)
        if has_valid:
            valid = evaluate(model, dataset, "valid", config, stats)
            report.add(epoch, "valid", config.metric, valid)
            improved = valid > best_valid if higher else valid < best_valid
        else:
            valid, improved = math.nan, True
        if improved:
            best_valid, stale = valid, 0
            report.best_epoch, report.best_valid = epoch, valid
            best_state = copy.deepcopy([p.data for p in params])
        else:
            stale += 1
        if progress is not None:
            progress(epoch, train_loss, valid)
        log.info("epoch %d loss %.5f valid %s %.5f", epoch, train_loss, config.metric, valid)
        if stale >= config.patience:
            break

    for p, data in zip(params, best_state):
        p.data = data
    if dataset.subset("test"):
        report.test = evaluate(model, dataset, "test", config, stats, seed_offset=1)
        report.add(report.best_epoch, "test", config.metric, report.test)
    return report, model
