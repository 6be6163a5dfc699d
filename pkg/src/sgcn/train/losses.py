"""Scalar training losses as tape operations."""
import numpy as np

from ..tensor import ShapeError, Tensor


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-softmax of the true class (max-shifted)."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or logits.shape[0] != len(labels):
        raise ShapeError(f"logits {logits.shape} do not match {len(labels)} labels")
    m, c = logits.shape
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(m)
    loss = (logsumexp - z[rows, labels]).mean()

    def backward(g):
        probs = np.exp(z - logsumexp[:, None])
        probs[rows, labels] -= 1.0
        return (g * probs / m,)

    return Tensor._from_op(np.array(loss), (logits,), backward)


def mse(pred: Tensor, target) -> Tensor:
    """Mean squared difference over all entries."""
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"mse: prediction {pred.shape} and target {target.shape} differ")
    diff = pred.data - target
    count = diff.size

    def backward(g):
        return (g * 2.0 * diff / count,)

    return Tensor._from_op(np.array((diff**2).mean()), (pred,), backward)
