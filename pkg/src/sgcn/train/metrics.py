import numpy as np


class UndefinedMetricError(ValueError):
    pass


def roc_auc(scores, labels) -> float:
    """P(score of a positive > score of a negative), ties counted as one half.

    Exact over all positive x negative pairs, computed from tie-aware ranks.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC AUC needs both positive and negative examples")
    neg = np.sort(scores[~labels])
    pos = scores[labels]
    below = np.searchsorted(neg, pos, side="left")
    tied = np.searchsorted(neg, pos, side="right") - below
    # integer numerator keeps the result exact for any realistic size
    twice_wins = int(2 * below.sum() + tied.sum())
    return twice_wins / (2 * n_pos * n_neg)


def accuracy(logits, labels) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(labels)))


def rmse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    return float(np.sqrt(np.mean((pred - target) ** 2)))
