"""Spatial graph convolution layers and the stacked model."""
from __future__ import annotations

import enum
import hashlib
import json
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .graph import relative_positions
from .tensor import ShapeError, Tensor, add_bias, matmul, relu, reshape, segment_mean


class LayerMode(str, enum.Enum):
    SPATIAL = "spatial"
    VANILLA = "vanilla"
    POS_CONCAT = "pos_concat"


def _rel(graph, mode: LayerMode) -> np.ndarray:
    if mode is LayerMode.SPATIAL:
        if graph.positions is None:
            raise ValueError("spatial mode needs node positions")
        return relative_positions(graph.positions, graph.indptr, graph.indices)
    return None


_TYPE_CACHE: OrderedDict = OrderedDict()
_TYPE_CACHE_SIZE = 2048


def graph_edge_types(graph) -> tuple[np.ndarray, np.ndarray]:
    """``kernels.edge_types`` of one graph's relative positions, memoised.

    The key is a digest of positions and neighbour lists, so every image of
    the same size shares one entry and a changed geometry can never hit a
    stale one.
    """
    if graph.positions is None:
        raise ValueError("spatial mode needs node positions")
    digest = hashlib.blake2b(digest_size=16)
    for part in (graph.positions, graph.indptr, graph.indices):
        digest.update(np.ascontiguousarray(part).view(np.uint8))
    key = (graph.positions.shape, digest.digest())
    hit = _TYPE_CACHE.get(key)
    if hit is not None:
        _TYPE_CACHE.move_to_end(key)
        return hit
    types = kernels.edge_types(relative_positions(graph.positions, graph.indptr, graph.indices))
    _TYPE_CACHE[key] = types
    if len(_TYPE_CACHE) > _TYPE_CACHE_SIZE:
        _TYPE_CACHE.popitem(last=False)
    return types


def batch_edge_types(batch, mode: LayerMode, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge types of a graph or batch; a single all-zero type off spatial mode."""
    if mode is not LayerMode.SPATIAL:
        return np.zeros((1, t)), np.zeros(batch.num_edges, dtype=np.int64)
    graphs = getattr(batch, "graphs", None)
    if graphs is None:
        return graph_edge_types(batch)
    if batch.positions is None:
        raise ValueError("spatial mode needs node positions")
    # a batch edited after construction no longer matches its source graphs
    if not graphs or not np.array_equal(batch.positions, np.concatenate([g.positions for g in graphs])):
        return kernels.edge_types(relative_positions(batch.positions, batch.indptr, batch.indices))
    return kernels.merge_edge_types([graph_edge_types(g) for g in graphs])


def aggregate(graph, h: Tensor, U: Tensor, b: Tensor, rel: np.ndarray | None = None,
              types: tuple[np.ndarray, np.ndarray] | None = None) -> Tensor:
    """Stacked spatial aggregation for ``k`` filters at once.

    ``U`` is ``(k, t, d)`` and ``b`` is ``(k, d)``. Row ``i`` of the result is
    the concatenation over filters ``m`` of
    ``sum_{j in N_i} relu(U_m^T (p_j - p_i) + b_m) * h_j``. ``rel`` overrides
    the relative positions; all-zero ``rel`` gives the position-free sum.
    ``types`` is ``kernels.edge_types(rel)`` when the caller already has it.
    """
    if U.ndim != 3 or b.ndim != 2 or U.shape[0] != b.shape[0] or U.shape[2] != b.shape[1]:
        raise ShapeError(f"filter shapes U={U.shape}, b={b.shape} do not agree")
    if h.ndim != 2 or h.shape[0] != graph.n or h.shape[1] != U.shape[2]:
        raise ShapeError(
            f"features {h.shape} do not fit {graph.n} nodes and filter width {U.shape[2]}"
        )
    t = U.shape[1]
    if types is None:
        if rel is None:
            if graph.positions is None:
                raise ValueError("graph has no positions")
            rel = relative_positions(graph.positions, graph.indptr, graph.indices)
        if rel.shape != (graph.num_edges, t):
            raise ShapeError(f"relative positions {rel.shape} do not match t={t}")
        types = kernels.edge_types(rel)
    table, etype = types
    if table.shape[1] != t or len(etype) != graph.num_edges:
        raise ShapeError(f"edge types ({table.shape}, {len(etype)} edges) do not match t={t}")
    indptr, indices = graph.indptr, graph.indices
    hv, Uv = h.data, U.data
    pre = kernels.gate_preactivation(table, Uv, b.data)
    gates = np.maximum(pre, 0.0)
    out = kernels.scatter_forward(indptr, indices, etype, gates, hv)

    def backward(g):
        gh, ggates = kernels.scatter_backward(indptr, indices, etype, gates, hv, np.ascontiguousarray(g))
        return (gh,) + kernels.gate_backward(table, Uv, pre, ggates)

    return Tensor._from_op(out, (h, U, b), backward)


def spatial_aggregate(graph, h: Tensor, U: Tensor, b: Tensor) -> Tensor:
    """One filter: ``U`` is ``(t, d)``, ``b`` is ``(d,)``. Returns ``(n, d)``.

    Nodes with no neighbours get a zero row.
    """
    if U.ndim != 2 or b.ndim != 1:
        raise ShapeError(f"single filter expects U (t, d) and b (d,), got {U.shape}, {b.shape}")
    return aggregate(graph, h, reshape(U, (1,) + U.shape), reshape(b, (1,) + b.shape))


@dataclass
class SgcnLayerParams:
    """Filters stacked as ``U`` (k, t, d_in) and ``b`` (k, d_in), then the
    per-node affine map ``W`` (k*d_in, d_out) with ``bias`` (d_out)."""

    U: Tensor
    b: Tensor
    W: Tensor
    bias: Tensor

    def __post_init__(self):
        k, t, d_in = self.U.shape
        if self.b.shape != (k, d_in):
            raise ShapeError(f"filter biases {self.b.shape} do not match U {self.U.shape}")
        if self.W.shape[0] != k * d_in:
            raise ShapeError(f"W input extent {self.W.shape[0]} != k*d_in = {k * d_in}")
        if self.bias.shape != (self.W.shape[1],):
            raise ShapeError(f"bias {self.bias.shape} does not match W {self.W.shape}")

    @property
    def k(self) -> int:
        return self.U.shape[0]

    @property
    def t(self) -> int:
        return self.U.shape[1]

    @property
    def d_in(self) -> int:
        return self.U.shape[2]

    @property
    def d_out(self) -> int:
        return self.W.shape[1]

    @property
    def filters(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.U.data[m], self.b.data[m]) for m in range(self.k)]

    def parameters(self) -> list[Tensor]:
        return [self.U, self.b, self.W, self.bias]

    @classmethod
    def init(cls, rng: np.random.Generator, t: int, d_in: int, d_out: int, k: int) -> SgcnLayerParams:
        # gates start open (b = 0.5) so ReLU(U^T dp + b) is not dead everywhere
        lim_u = 1.0 / np.sqrt(t)
        lim_w = 1.0 / np.sqrt(k * d_in)
        return cls(
            U=Tensor(rng.uniform(-lim_u, lim_u, size=(k, t, d_in)), requires_grad=True),
            b=Tensor(np.full((k, d_in), 0.5), requires_grad=True),
            W=Tensor(rng.uniform(-lim_w, lim_w, size=(k * d_in, d_out)), requires_grad=True),
            bias=Tensor(np.zeros(d_out), requires_grad=True),
        )


def layer_forward(graph, h: Tensor, params: SgcnLayerParams, mode=LayerMode.SPATIAL,
                  rel: np.ndarray | None = None, types=None) -> Tensor:
    """Concatenated filter responses followed by ``relu(. @ W + bias)``.

    In ``vanilla`` and ``pos_concat`` modes positions are treated as zero, so
    each filter reduces to ``relu(b) * sum_j h_j``.
    """
    mode = LayerMode(mode)
    if rel is None and types is None:
        rel = _rel(graph, mode)
        if rel is None:
            rel = np.zeros((graph.num_edges, params.t))
    hbar = aggregate(graph, h, params.U, params.b, rel, types)
    return relu(add_bias(matmul(hbar, params.W), params.bias))


def model_forward(batch, h: Tensor, layers: list[SgcnLayerParams], mode=LayerMode.SPATIAL,
                  readout: str = "mean") -> Tensor:
    """Stack of layers, then a per-graph mean over node rows.

    Positions are shared by every layer; only the features change.
    """
    if readout != "mean":
        raise ValueError(f"unsupported readout {readout!r}")
    mode = LayerMode(mode)
    for a, nxt in zip(layers, layers[1:]):
        if a.d_out != nxt.d_in:
            raise ShapeError(f"layer dims do not chain: {a.d_out} -> {nxt.d_in}")
    types = batch_edge_types(batch, mode, layers[0].t)
    for params in layers:
        h = layer_forward(batch, h, params, mode, types=types)
    starts = getattr(batch, "starts", np.zeros(1, dtype=np.int64))
    return segment_mean(h, starts)


@dataclass
class SgcnModel:
    """Graph layers, mean readout and a linear output head."""

    layers: list[SgcnLayerParams]
    head_W: Tensor
    head_b: Tensor
    mode: LayerMode = LayerMode.SPATIAL
    meta: dict = field(default_factory=dict)

    @classmethod
    def init(cls, rng, t: int, d_in: int, dims: list[int], filters: list[int] | int,
             n_out: int, mode=LayerMode.SPATIAL) -> SgcnModel:
        if isinstance(filters, int):
            filters = [filters] * len(dims)
        if len(filters) != len(dims):
            raise ValueError("need one filter count per layer")
        layers, width = [], d_in
        for d_out, k in zip(dims, filters):
            layers.append(SgcnLayerParams.init(rng, t, width, d_out, k))
            width = d_out
        lim = 1.0 / np.sqrt(width)
        return cls(
            layers=layers,
            head_W=Tensor(rng.uniform(-lim, lim, size=(width, n_out)), requires_grad=True),
            head_b=Tensor(np.zeros(n_out), requires_grad=True),
            mode=LayerMode(mode),
        )

    def parameters(self) -> list[Tensor]:
        params = [p for layer in self.layers for p in layer.parameters()]
        return params + [self.head_W, self.head_b]

    def parameter_names(self) -> list[str]:
        names = [f"layer{i}.{n}" for i in range(len(self.layers)) for n in ("U", "b", "W", "bias")]
        return names + ["head.W", "head.b"]

    def embed(self, batch) -> Tensor:
        features = batch.features
        if self.mode is LayerMode.POS_CONCAT:
            # coordinates join the features after any augmentation of the batch
            features = np.concatenate([features, batch.positions], axis=1)
        return model_forward(batch, Tensor(features), self.layers, self.mode)

    def __call__(self, batch) -> Tensor:
        return add_bias(matmul(self.embed(batch), self.head_W), self.head_b)

    def predict(self, batch) -> np.ndarray:
        return self(batch).data

    def save(self, path) -> None:
        save_checkpoint(path, self)

    @classmethod
    def load(cls, path) -> SgcnModel:
        return load_checkpoint(path)


CHECKPOINT_MAGIC = b"SGCNCKPT"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, model: SgcnModel) -> None:
    """Write ``magic | u32 version | u64 header length | JSON header | blocks``.

    Blocks are the parameters in declaration order as little-endian float64.
    """
    blocks = model.parameters()
    header = {
        "version": CHECKPOINT_VERSION,
        "mode": model.mode.value,
        "t": model.layers[0].t,
        "layers": [
            {"k": layer.k, "d_in": layer.d_in, "d_out": layer.d_out} for layer in model.layers
        ],
        "n_out": model.head_W.shape[1],
        "blocks": [
            {"name": n, "shape": list(p.shape)} for n, p in zip(model.parameter_names(), blocks)
        ],
        "meta": model.meta,
    }
    raw_header = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(raw_header)))
        f.write(raw_header)
        for p in blocks:
            f.write(p.data.astype("<f8").tobytes())


def load_checkpoint(path) -> SgcnModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not an SGCN checkpoint")
    offset = len(CHECKPOINT_MAGIC)
    version, hlen = struct.unpack_from("<IQ", raw, offset)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset += struct.calcsize("<IQ")
    header = json.loads(raw[offset:offset + hlen].decode("utf-8"))
    offset += hlen
    arrays = []
    for block in header["blocks"]:
        count = int(np.prod(block["shape"]))
        if offset + 8 * count > len(raw):
            raise ValueError(f"{path}: truncated parameter block {block['name']}")
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(block["shape"])
        arrays.append(Tensor(arr, requires_grad=True))
        offset += 8 * count
    if offset != len(raw):
        raise ValueError(f"{path}: trailing bytes after parameter blocks")
    layers = [SgcnLayerParams(*arrays[4 * i:4 * i + 4]) for i in range(len(header["layers"]))]
    return SgcnModel(
        layers=layers,
        head_W=arrays[-2],
        head_b=arrays[-1],
        mode=LayerMode(header["mode"]),
        meta=header.get("meta", {}),
    )
