"""Spatial graphs: node features, node positions and neighbour lists."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

# Positions live on a dyadic lattice so that translating a graph is an exact
# floating-point operation (for |p| < 2**11) and relative positions p_j - p_i
# are bit-identical before and after the shift.
LATTICE_BITS = 42
_SCALE = float(2**LATTICE_BITS)


def snap(positions) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.float64)
    return np.rint(positions * _SCALE) / _SCALE


def _csr_from_lists(neighbors: Sequence[Sequence[int]]):
    counts = np.array([len(nb) for nb in neighbors], dtype=np.int64)
    indptr = np.zeros(len(neighbors) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    if indptr[-1]:
        indices = np.concatenate([np.asarray(nb, dtype=np.int64) for nb in neighbors if len(nb)])
    else:
        indices = np.zeros(0, dtype=np.int64)
    return indptr, indices


@dataclass(eq=False)
class SpatialGraph:
    """One graph. Node ``i`` receives messages from ``neighbors(i)``.

    ``indptr``/``indices`` hold the neighbour lists in CSR form; lists are
    sorted and duplicate-free. ``positions`` may be ``None`` for graphs
    without geometry.
    """

    features: np.ndarray
    positions: np.ndarray | None
    indptr: np.ndarray
    indices: np.ndarray
    label: object = None
    undirected: bool = False
    name: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be n x d, got shape {self.features.shape}")
        n = self.features.shape[0]
        if n == 0:
            raise ValueError("graph must have at least one node")
        if self.positions is not None:
            self.positions = snap(self.positions)
            if self.positions.shape[0] != n or self.positions.ndim != 2:
                raise ValueError(
                    f"positions shape {self.positions.shape} does not match {n} nodes"
                )
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("indptr inconsistent with node count or indices")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError("neighbour index out of range")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be non-decreasing")
        # a non-increasing step is only allowed where a new list starts
        steps = np.diff(self.indices) <= 0
        bounds = self.indptr[1:-1]
        steps[bounds[(bounds > 0) & (bounds < len(self.indices))] - 1] = False
        if np.any(steps):
            node = int(np.searchsorted(self.indptr, np.flatnonzero(steps)[0], side="right") - 1)
            raise ValueError(f"neighbour list of node {node} is not sorted and unique")
        if self.undirected and not self.is_symmetric():
            raise ValueError("graph flagged undirected but neighbour lists are not symmetric")

    @classmethod
    def from_neighbors(cls, features, positions, neighbors, **kwargs) -> SpatialGraph:
        indptr, indices = _csr_from_lists(neighbors)
        return cls(features, positions, indptr, indices, **kwargs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def t(self) -> int | None:
        return None if self.positions is None else self.positions.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.indices)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def neighbor_lists(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.n)]

    def is_symmetric(self) -> bool:
        src = receivers(self.indptr)
        forward = np.sort(src * self.n + self.indices)
        reverse = np.sort(self.indices * self.n + src)
        return bool(np.array_equal(forward, reverse))

    def replace(self, **changes) -> SpatialGraph:
        fields = dict(
            features=self.features,
            positions=self.positions,
            indptr=self.indptr,
            indices=self.indices,
            label=self.label,
            undirected=self.undirected,
            name=self.name,
            meta=self.meta,
        )
        fields.update(changes)
        return SpatialGraph(**fields)


def receivers(indptr: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(len(indptr) - 1, dtype=np.int64), np.diff(indptr))


def relative_positions(positions: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """``p_j - p_i`` for every edge, in CSR order."""
    return positions[indices] - positions[receivers(indptr)]


@lru_cache(maxsize=16)
def _grid_structure(rows: int, cols: int, k: int):
    r, c = np.divmod(np.arange(rows * cols), cols)
    # offsets in row-major order keep every list sorted by node index
    offsets = [(dr, dc) for dr in range(-k, k + 1) for dc in range(-k, k + 1)]
    nb = np.full((rows * cols, len(offsets)), -1, dtype=np.int64)
    for o, (dr, dc) in enumerate(offsets):
        rr, cc = r + dr, c + dc
        ok = (rr >= 0) & (rr < rows) & (cc >= 0) & (cc < cols)
        nb[ok, o] = rr[ok] * cols + cc[ok]
    valid = nb >= 0
    indptr = np.zeros(rows * cols + 1, dtype=np.int64)
    np.cumsum(valid.sum(axis=1), out=indptr[1:])
    indices = nb[valid]
    positions = np.stack([r, c], axis=1).astype(np.float64)
    for a in (indptr, indices, positions):
        a.setflags(write=False)
    return indptr, indices, positions


def build_grid_graph(image, radius: int = 1, label=None) -> SpatialGraph:
    """One node per pixel, position ``(row, col)``, intensity as the feature.

    Each node's neighbourhood is every in-bounds pixel within Chebyshev
    distance ``radius``, the node itself included.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ValueError(f"image must be a non-empty 2-d array, got shape {image.shape}")
    if radius < 0:
        raise ValueError("radius must be non-negative")
    indptr, indices, positions = _grid_structure(image.shape[0], image.shape[1], int(radius))
    return SpatialGraph(
        image.reshape(-1, 1), positions, indptr, indices, label=label, undirected=True
    )


def knn_graph(points, features, k: int, label=None) -> SpatialGraph:
    """Connect each point to its ``k`` nearest others, then symmetrise.

    Ties in distance go to the lower node index; distances are compared at a
    resolution of ``1e-10`` so that geometric ties survive rounding noise.
    Self loops are never added.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    dist = np.round(dist, 10)
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), nearest.reshape(-1)] = True
    adj |= adj.T
    neighbors = [np.flatnonzero(row) for row in adj]
    return SpatialGraph.from_neighbors(features, points, neighbors, label=label, undirected=True)


@dataclass(eq=False)
class GraphBatch:
    """Several graphs stacked block-diagonally.

    ``starts[g]`` is the first row of graph ``g``; ``segment[row]`` maps a
    node row to its graph.
    """

    features: np.ndarray
    positions: np.ndarray | None
    indptr: np.ndarray
    indices: np.ndarray
    starts: np.ndarray
    labels: list
    graphs: list = field(repr=False, default_factory=list)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_graphs(self) -> int:
        return len(self.starts)

    @property
    def num_edges(self) -> int:
        return len(self.indices)

    @property
    def segment(self) -> np.ndarray:
        counts = np.diff(np.append(self.starts, self.n))
        return np.repeat(np.arange(self.num_graphs), counts)


def batch(graphs: Sequence[SpatialGraph]) -> GraphBatch:
    if not graphs:
        raise ValueError("cannot batch an empty list of graphs")
    d, t = graphs[0].d, graphs[0].t
    for g in graphs:
        if g.d != d or g.t != t:
            raise ValueError(f"mismatched graph dims: d={g.d}, t={g.t} vs d={d}, t={t}")
    sizes = np.array([g.n for g in graphs], dtype=np.int64)
    starts = np.zeros(len(graphs), dtype=np.int64)
    np.cumsum(sizes[:-1], out=starts[1:])
    edge_counts = np.array([g.num_edges for g in graphs], dtype=np.int64)
    edge_starts = np.concatenate([[0], np.cumsum(edge_counts)])
    indptr = np.empty(sizes.sum() + 1, dtype=np.int64)
    indptr[-1] = edge_starts[-1]
    indices = np.empty(edge_starts[-1], dtype=np.int64)
    for g, s, e in zip(graphs, starts, edge_starts):
        indptr[s:s + g.n] = g.indptr[:-1] + e
        indices[e:e + g.num_edges] = g.indices + s
    positions = None if t is None else np.concatenate([g.positions for g in graphs])
    return GraphBatch(
        features=np.concatenate([g.features for g in graphs]),
        positions=positions,
        indptr=indptr,
        indices=indices,
        starts=starts,
        labels=[g.label for g in graphs],
        graphs=list(graphs),
    )


def split(b: GraphBatch) -> list[SpatialGraph]:
    """Inverse of :func:`batch`: rebuild the individual graphs."""
    out = []
    ends = np.append(b.starts[1:], b.n)
    for g, (s, e) in enumerate(zip(b.starts, ends)):
        lo, hi = b.indptr[s], b.indptr[e]
        template = b.graphs[g] if g < len(b.graphs) else None
        out.append(
            SpatialGraph(
                features=b.features[s:e],
                positions=None if b.positions is None else b.positions[s:e],
                indptr=b.indptr[s:e + 1] - lo,
                indices=b.indices[lo:hi] - s,
                label=b.labels[g],
                undirected=template.undirected if template is not None else False,
                name=template.name if template is not None else None,
                meta=template.meta if template is not None else {},
            )
        )
    return out
