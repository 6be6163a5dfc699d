"""A small reverse-mode autodiff tensor over float64 numpy arrays.

Every op returns a new :class:`Tensor` that remembers its parents and a
closure mapping the upstream gradient to one gradient per parent. Calling
:func:`backward` on a scalar walks that record in reverse topological order
(the tape) and accumulates into ``.grad`` of every leaf with
``requires_grad=True``.

Shapes are never broadcast implicitly; the single exception is
:func:`add_bias`, which adds a vector to every row of a matrix.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes do not agree."""


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim == 0:
            arr = arr.reshape(())
        if any(extent == 0 for extent in arr.shape):
            raise ShapeError(f"tensor extents must be positive, got {arr.shape}")
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None
        self.name = name

    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls.__new__(cls)
        out.data = np.ascontiguousarray(data, dtype=np.float64)
        out.requires_grad = any(p.requires_grad for p in parents)
        out.grad = None
        out.name = None
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    av, bv = a.data, b.data

    def backward(g):
        return g @ bv.T, av.T @ g

    return Tensor._from_op(_rowwise_product(av, bv), (a, b), backward)


def _rowwise_product(av, bv):
    # a single row would go through BLAS gemv, whose rounding differs from
    # gemm; padding keeps each row's result independent of the row count
    if av.shape[0] == 1:
        return (np.vstack([av, av]) @ bv)[:1]
    return av @ bv


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0

    def backward(g):
        return (g * mask,)

    return Tensor._from_op(np.where(mask, a.data, 0.0), (a,), backward)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "hadamard")
    av, bv = a.data, b.data

    def backward(g):
        return g * bv, g * av

    return Tensor._from_op(av * bv, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return Tensor._from_op(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    return Tensor._from_op(a.data - b.data, (a, b), lambda g: (g, -g))


def scale(a: Tensor, c: float) -> Tensor:
    return Tensor._from_op(a.data * c, (a,), lambda g: (g * c,))


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise ShapeError("concat: empty list of parts")
    ndim = parts[0].ndim
    if not -ndim <= axis < ndim:
        raise ShapeError(f"concat: axis {axis} invalid for {ndim}-d parts")
    axis %= ndim
    for p in parts[1:]:
        if p.ndim != ndim or any(
            p.shape[i] != parts[0].shape[i] for i in range(ndim) if i != axis
        ):
            raise ShapeError(
                f"concat: incompatible shapes {[q.shape for q in parts]} along axis {axis}"
            )
    if len(parts) == 1:
        return parts[0]
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor._from_op(np.concatenate([p.data for p in parts], axis=axis), parts, backward)


def add_bias(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 1 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"add_bias: bias {b.shape} does not fit rows of {a.shape}")

    def backward(g):
        return g, g.sum(axis=0)

    return Tensor._from_op(a.data + b.data, (a, b), backward)


def reduce(a: Tensor, kind: str = "sum", axis: int | None = None) -> Tensor:
    """Sum or mean over ``axis`` (all axes when ``None``)."""
    if kind not in ("sum", "mean"):
        raise ValueError(f"reduce: unknown kind {kind!r}")
    if axis is not None:
        if not -a.ndim <= axis < a.ndim:
            raise ShapeError(f"reduce: axis {axis} invalid for shape {a.shape}")
        axis %= a.ndim
    count = a.data.size if axis is None else a.shape[axis]
    out = a.data.sum(axis=axis)
    if kind == "mean":
        out = out / count
    shape = a.shape

    def backward(g):
        g = np.asarray(g)
        if axis is not None:
            g = np.expand_dims(g, axis)
        g = np.broadcast_to(g, shape)
        return ((g / count) if kind == "mean" else g.copy(),)

    return Tensor._from_op(out, (a,), backward)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    old = a.shape
    return Tensor._from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def take_rows(a: Tensor, rows: np.ndarray) -> Tensor:
    """Gather rows ``a[rows]``; gradients scatter-add back."""
    rows = np.asarray(rows, dtype=np.int64)
    shape = a.shape

    def backward(g):
        out = np.zeros(shape)
        np.add.at(out, rows, g)
        return (out,)

    return Tensor._from_op(a.data[rows], (a,), backward)


def segment_mean(a: Tensor, starts: np.ndarray) -> Tensor:
    """Mean of row blocks ``a[starts[s]:starts[s+1]]``; blocks must be non-empty."""
    starts = np.asarray(starts, dtype=np.int64)
    n = a.shape[0]
    counts = np.diff(np.append(starts, n))
    if np.any(counts <= 0):
        raise ShapeError("segment_mean: empty segment")
    out = np.add.reduceat(a.data, starts, axis=0) / counts[:, None]

    def backward(g):
        return (np.repeat(g / counts[:, None], counts, axis=0),)

    return Tensor._from_op(out, (a,), backward)


def topological_order(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Populate ``.grad`` on all ``requires_grad`` leaves reachable from ``root``.

    Gradients accumulate across calls until :meth:`Tensor.zero_grad`.
    """
    if root.data.size != 1:
        raise ShapeError(f"backward: root must be scalar, got shape {root.shape}")
    if not root.requires_grad:
        return
    grads = {id(root): np.ones_like(root.data)}
    for node in reversed(topological_order(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad or pg is None:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg


def grad_check(f: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-6) -> float:
    """Worst relative error between tape gradients and central differences.

    ``f`` is called with ``inputs`` and must return a scalar tensor. The error
    per coordinate is ``|a - n| / max(1, |a|, |n|)``.
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")
    for x in inputs:
        x.requires_grad = True
        x.zero_grad()
    out = f(*inputs)
    if out.data.size != 1:
        raise ShapeError(f"grad_check: f must be scalar-valued, got shape {out.shape}")
    backward(out)
    worst = 0.0
    for x in inputs:
        analytic = np.zeros_like(x.data) if x.grad is None else x.grad
        flat = x.data.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            plus = f(*inputs).item()
            flat[idx] = orig - eps
            minus = f(*inputs).item()
            flat[idx] = orig
            numeric = (plus - minus) / (2.0 * eps)
            a = analytic.reshape(-1)[idx]
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, err)
    return worst
