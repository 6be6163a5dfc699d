"""Emulating a 2-d convolution with spatial graph aggregations.

A ``(2k+1) x (2k+1)`` filter is rebuilt from ``n = (2k+1)**2`` single-filter
aggregations on the pixel grid graph that share one direction ``u`` and
differ only in their bias. Sorting the filter offsets by ``u . p`` and placing
each bias between two consecutive projections makes aggregation ``m`` see
exactly the first ``m`` offsets, so the coefficient matrix is triangular and
a single solve recovers the mixing weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .graph import build_grid_graph
from .layers import aggregate
from .tensor import Tensor


def _check_filter(F) -> tuple[np.ndarray, int]:
    F = np.asarray(F.data if isinstance(F, Tensor) else F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] % 2 == 0:
        raise ValueError(f"filter must be square with odd side, got shape {F.shape}")
    return F, F.shape[0] // 2


def conv2d_oracle(F, H) -> np.ndarray:
    """``g[i, j] = sum f[a, b] * h[i + a, j + b]`` over in-bounds terms only.

    Offsets ``a, b`` run over ``-k..k`` with ``F[a + k, b + k] = f[a, b]``.
    """
    F, k = _check_filter(F)
    H = np.asarray(H.data if isinstance(H, Tensor) else H, dtype=np.float64)
    N, K = H.shape
    G = np.zeros_like(H)
    for a in range(-k, k + 1):
        for b in range(-k, k + 1):
            f = F[a + k, b + k]
            if f == 0.0:
                continue
            r0, r1 = max(0, -a), min(N, N - a)
            c0, c1 = max(0, -b), min(K, K - b)
            if r0 < r1 and c0 < c1:
                G[r0:r1, c0:c1] += f * H[r0 + a:r1 + a, c0 + b:c1 + b]
    return G


def choose_u(k: int) -> np.ndarray:
    """Direction with ``u . p`` injective over offsets in ``{-k..k}**2``.

    With ``u = (1, 2k+1)``, equal projections force the column difference to
    be a multiple of ``2k+1`` that is at most ``2k`` in size, hence zero.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    return np.array([1.0, 2.0 * k + 1.0])


@dataclass
class CnnEquivalenceParams:
    u: np.ndarray
    offsets: np.ndarray  # (n, 2), sorted by decreasing u . p
    biases: np.ndarray  # (n,)
    weights: np.ndarray  # (n,)
    gate_matrix: np.ndarray  # M[m, i] = u.p_i + b_m for i <= m, else 0

    @property
    def n(self) -> int:
        return len(self.biases)

    def residual(self, F) -> float:
        F, k = _check_filter(F)
        f = F[self.offsets[:, 0].astype(int) + k, self.offsets[:, 1].astype(int) + k]
        return float(np.max(np.abs(self.gate_matrix.T @ self.weights - f)))


def theorem_params(F) -> CnnEquivalenceParams:
    F, k = _check_filter(F)
    u = choose_u(k)
    offsets = np.array([(a, b) for a in range(-k, k + 1) for b in range(-k, k + 1)], dtype=np.float64)
    proj = offsets @ u
    order = np.argsort(-proj, kind="stable")
    offsets, proj = offsets[order], proj[order]
    if np.any(np.diff(proj) >= 0):
        raise AssertionError("projections are not strictly decreasing")
    n = len(proj)
    biases = np.empty(n)
    biases[:-1] = -(proj[:-1] + proj[1:]) / 2.0
    biases[-1] = -proj[-1] + 1.0
    M = proj[None, :] + biases[:, None]
    M = np.where(np.tril(np.ones((n, n), dtype=bool)), M, 0.0)
    diag = np.diag(M)
    if np.any(diag <= 0):
        raise AssertionError("gate matrix diagonal must be strictly positive")
    f = F[offsets[:, 0].astype(int) + k, offsets[:, 1].astype(int) + k]
    # M^T is upper triangular
    w = solve_triangular(M.T, f, lower=False)
    return CnnEquivalenceParams(u=u, offsets=offsets, biases=biases, weights=w, gate_matrix=M)


def sgcn_emulate_conv(F, H, params: CnnEquivalenceParams | None = None) -> np.ndarray:
    """``F * H`` computed as ``sum_m w_m * aggregate(U=u, b=b_m)`` on the grid graph."""
    F, k = _check_filter(F)
    H = np.asarray(H.data if isinstance(H, Tensor) else H, dtype=np.float64)
    if params is None:
        params = theorem_params(F)
    graph = build_grid_graph(H, radius=k)
    n = params.n
    # all n biases as one stacked aggregation: U (n, 2, 1), b (n, 1)
    U = Tensor(np.broadcast_to(params.u[None, :, None], (n, 2, 1)))
    b = Tensor(params.biases[:, None])
    responses = aggregate(graph, Tensor(graph.features), U, b).data  # (pixels, n)
    return (responses @ params.weights).reshape(H.shape)
