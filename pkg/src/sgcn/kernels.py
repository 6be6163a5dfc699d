"""Hot loops of the spatial aggregation, in numba and numpy flavours.

Neighbourhoods are stored CSR-style by receiving node: node ``i`` receives
from ``indices[indptr[i]:indptr[i+1]]``. A gate depends on an edge only
through its relative position, so edges carry an integer ``etype`` into a
table of distinct relative positions and gates are evaluated once per row of
that table (a pixel grid has ``(2r+1)**2`` of them, a molecule one per edge).

Gate tables are ``(T, k*d)``: filter-major stacking of the ``k`` filters.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit


def edge_types(rel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct relative positions and, per edge, the index of its row."""
    if len(rel) == 0:
        return rel.reshape(0, rel.shape[1]), np.zeros(0, dtype=np.int64)
    order = np.lexsort(rel.T[::-1])
    ranked = rel[order]
    first = np.ones(len(rel), dtype=bool)
    first[1:] = np.any(ranked[1:] != ranked[:-1], axis=1)
    etype = np.empty(len(rel), dtype=np.int64)
    etype[order] = np.cumsum(first) - 1
    return np.ascontiguousarray(ranked[first]), etype


def merge_edge_types(parts) -> tuple[np.ndarray, np.ndarray]:
    """Combine per-graph ``(table, etype)`` pairs for graphs stacked in order."""
    tables = [table for table, _ in parts]
    offsets = np.cumsum([0] + [len(table) for table in tables[:-1]])
    table, remap = edge_types(np.concatenate(tables))
    etype = np.concatenate([e + off for (_, e), off in zip(parts, offsets)])
    return table, remap[etype]


def gate_preactivation(table: np.ndarray, U: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``b + U^T r`` for every table row ``r``; shape ``(T, k*d)``."""
    k, t, d = U.shape
    pre = np.broadcast_to(b.reshape(1, k * d), (table.shape[0], k * d)).copy()
    for s in range(t):
        pre += table[:, s, None] * U[:, s, :].reshape(1, k * d)
    return pre


@njit
def _scatter_fwd_jit(indptr, indices, etype, gates, ht):
    # ht is h tiled k times, so each edge is one contiguous k*d-wide update
    n = indptr.shape[0] - 1
    w = gates.shape[1]
    out = np.zeros((n, w))
    for i in range(n):
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            ty = etype[e]
            for c in range(w):
                out[i, c] += gates[ty, c] * ht[j, c]
    return out


@njit
def _scatter_bwd_jit(indptr, indices, etype, gates, ht, gout):
    n = indptr.shape[0] - 1
    w = gates.shape[1]
    ght = np.zeros(ht.shape)
    ggates = np.zeros(gates.shape)
    for i in range(n):
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            ty = etype[e]
            for c in range(w):
                go = gout[i, c]
                ght[j, c] += gates[ty, c] * go
                ggates[ty, c] += go * ht[j, c]
    return ght, ggates


def _receivers(indptr):
    return np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))


def _scatter_fwd_np(indptr, indices, etype, gates, h):
    n = indptr.shape[0] - 1
    d = h.shape[1]
    k = gates.shape[1] // d
    msg = gates[etype] * np.tile(h[indices], (1, k))
    out = np.zeros((n, k * d))
    np.add.at(out, _receivers(indptr), msg)
    return out


def _scatter_bwd_np(indptr, indices, etype, gates, h, gout):
    d = h.shape[1]
    k = gates.shape[1] // d
    ge = gout[_receivers(indptr)]
    gh = np.zeros(h.shape)
    np.add.at(gh, indices, (gates[etype] * ge).reshape(-1, k, d).sum(axis=1))
    ggates = np.zeros(gates.shape)
    np.add.at(ggates, etype, ge * np.tile(h[indices], (1, k)))
    return gh, ggates


def scatter_forward(indptr, indices, etype, gates, h, use_numba=None):
    """``out[i] = sum_e gates[etype[e]] * tile(h[indices[e]], k)`` over ``i``'s edges."""
    if HAVE_NUMBA if use_numba is None else use_numba:
        k = gates.shape[1] // h.shape[1]
        return _scatter_fwd_jit(indptr, indices, etype, gates, np.tile(h, (1, k)))
    return _scatter_fwd_np(indptr, indices, etype, gates, h)


def scatter_backward(indptr, indices, etype, gates, h, gout, use_numba=None):
    """Gradients ``(dh, dgates)`` of :func:`scatter_forward`."""
    if HAVE_NUMBA if use_numba is None else use_numba:
        n, d = h.shape
        k = gates.shape[1] // d
        ght, ggates = _scatter_bwd_jit(indptr, indices, etype, gates, np.tile(h, (1, k)), gout)
        return ght.reshape(n, k, d).sum(axis=1), ggates
    return _scatter_bwd_np(indptr, indices, etype, gates, h, gout)


def aggregate_forward(indptr, indices, rel, h, U, b, use_numba=None):
    """Stacked filter responses ``(n, k*d)`` straight from relative positions."""
    table, etype = edge_types(rel)
    gates = np.maximum(gate_preactivation(table, U, b), 0.0)
    return scatter_forward(indptr, indices, etype, gates, h, use_numba)


def aggregate_backward(indptr, indices, rel, h, U, b, gout, use_numba=None):
    """``(dh, dU, db)`` for :func:`aggregate_forward`; the ReLU gradient at 0 is 0."""
    table, etype = edge_types(rel)
    pre = gate_preactivation(table, U, b)
    gh, ggates = scatter_backward(indptr, indices, etype, np.maximum(pre, 0.0), h, gout, use_numba)
    return (gh,) + gate_backward(table, U, pre, ggates)


def gate_backward(table, U, pre, ggates):
    k, t, d = U.shape
    gpre = np.where(pre > 0.0, ggates, 0.0)
    gb = gpre.sum(axis=0).reshape(k, d)
    gU = (table.T @ gpre).reshape(t, k, d).transpose(1, 0, 2).copy()
    return gU, gb
