"""Geometric augmentation: rotations, translations and conformer sampling."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import GraphBatch, SpatialGraph, batch, snap, split


@dataclass(frozen=True)
class AugmentPolicy:
    rotate: bool = False
    rotation_dim: int = 3
    translate_sigma: float = 0.0
    conformer_pool_size: int = 0
    test_time_samples: int = 1

    def __post_init__(self):
        if self.rotation_dim not in (2, 3):
            raise ValueError("rotation_dim must be 2 or 3")
        if self.translate_sigma < 0 or self.conformer_pool_size < 0:
            raise ValueError("translate_sigma and conformer_pool_size must be non-negative")
        if self.test_time_samples < 1:
            raise ValueError("test_time_samples must be at least 1")

    @property
    def is_identity(self) -> bool:
        return not self.rotate and self.translate_sigma == 0 and self.conformer_pool_size <= 1


def check_rotation(R, tol: float = 1e-10) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"rotation must be square, got shape {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(len(R)))) > tol:
        raise ValueError("rotation matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("rotation matrix must have determinant +1")
    return R


def rotate(graph: SpatialGraph, R) -> SpatialGraph:
    """Rotate node positions about the origin (``p -> R p``)."""
    R = check_rotation(R)
    if graph.positions is None or graph.t != len(R):
        raise ValueError(f"rotation of size {len(R)} does not fit positions of dim {graph.t}")
    return graph.replace(positions=graph.positions @ R.T)


def translate(graph: SpatialGraph, shift) -> SpatialGraph:
    """Shift every position by ``shift``.

    The shift is snapped to the position lattice, which keeps ``p_j - p_i``
    bit-identical to the unshifted graph.
    """
    shift = snap(np.asarray(shift, dtype=np.float64).reshape(1, -1))
    return graph.replace(positions=graph.positions + shift)


def sample_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation: an angle in 2-d, a Gaussian quaternion in 3-d."""
    if dim == 2:
        theta = rng.uniform(0.0, 2.0 * np.pi)
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[c, -s], [s, c]])
    if dim == 3:
        q = rng.standard_normal(4)
        w, x, y, z = q / np.linalg.norm(q)
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ])
    raise ValueError(f"rotation dimension must be 2 or 3, got {dim}")


def pairwise_distances(positions) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def augment_graph(graph: SpatialGraph, policy: AugmentPolicy, pool, rng) -> SpatialGraph:
    out = graph
    if policy.conformer_pool_size > 0 and pool is not None and len(pool):
        usable = min(policy.conformer_pool_size, len(pool))
        choice = int(rng.integers(usable))
        coords = np.asarray(pool[choice], dtype=np.float64)
        if coords.shape != graph.positions.shape:
            raise ValueError(
                f"conformer of shape {coords.shape} does not match graph positions "
                f"{graph.positions.shape} ({graph.name or 'unnamed'})"
            )
        out = out.replace(positions=coords)
    if policy.rotate:
        out = rotate(out, sample_rotation(policy.rotation_dim, rng))
    if policy.translate_sigma > 0:
        out = translate(out, rng.normal(0.0, policy.translate_sigma, size=out.t))
    return out


def augment_batch(b: GraphBatch, policy: AugmentPolicy, pools=None, rng=None) -> GraphBatch:
    """Augment every graph of ``b`` independently and re-batch.

    ``pools[g]`` is the list of candidate position matrices for graph ``g``;
    one of the first ``conformer_pool_size`` entries is drawn uniformly.
    """
    if policy.is_identity and policy.conformer_pool_size == 0:
        return b
    if rng is None:
        rng = np.random.default_rng()
    graphs = split(b)
    if pools is None:
        pools = [None] * len(graphs)
    if len(pools) != len(graphs):
        raise ValueError("need one conformer pool per graph")
    return batch([augment_graph(g, policy, p, rng) for g, p in zip(graphs, pools)])


def test_time_predict(model, graph, policy: AugmentPolicy, samples: int | None = None,
                      pool=None, rng=None) -> np.ndarray:
    """Mean raw model output over ``samples`` independently augmented copies."""
    samples = policy.test_time_samples if samples is None else samples
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if rng is None:
        rng = np.random.default_rng()
    graphs = graph.graphs if isinstance(graph, GraphBatch) else [graph]
    pools = pool if isinstance(graph, GraphBatch) and pool is not None else [pool] * len(graphs)
    copies = [augment_graph(g, policy, p, rng) for _ in range(samples) for g, p in zip(graphs, pools)]
    out = model(batch(copies)).data.reshape(samples, len(graphs), -1)
    mean = sample_mean(out)
    return mean[0] if not isinstance(graph, GraphBatch) else mean


def sample_mean(stack: np.ndarray) -> np.ndarray:
    """Mean over axis 0, written as ``x_0 + mean(x_r - x_0)``.

    Identical samples (translation-only augmentation) give ``x_0`` back
    exactly, which a plain ``sum / R`` does not guarantee.
    """
    return stack[0] + (stack - stack[0]).mean(axis=0)


def write_conformer_pool(path, pools: dict[str, list[np.ndarray]]) -> None:
    """Text format: a header ``id n C`` then ``C`` blocks of ``n`` lines ``x y z``."""
    with open(path, "w") as f:
        for mol_id, confs in pools.items():
            n = len(confs[0]) if confs else 0
            f.write(f"{mol_id} {n} {len(confs)}\n")
            for coords in confs:
                for x, y, z in np.asarray(coords):
                    f.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")


def read_conformer_pool(path) -> dict[str, list[np.ndarray]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    pools: dict[str, list[np.ndarray]] = {}
    pos = 0
    while pos < len(lines):
        head = lines[pos].split()
        if len(head) != 3:
            raise ValueError(f"{path}:{pos + 1}: expected header 'id n C', got {lines[pos]!r}")
        mol_id, n, count = head[0], int(head[1]), int(head[2])
        pos += 1
        confs = []
        for _ in range(count):
            block = lines[pos:pos + n]
            if len(block) != n:
                raise ValueError(f"{path}: truncated conformer block for {mol_id}")
            confs.append(np.array([[float(v) for v in ln.split()] for ln in block]).reshape(n, 3))
            pos += n
        pools[mol_id] = confs
    return pools
