"""Plain SGD and bias-corrected Adam over lists of tensors."""
from __future__ import annotations

import numpy as np

from ..tensor import Tensor


class NonFiniteGradientError(FloatingPointError):
    pass


def _check(params, names):
    for i, p in enumerate(params):
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            name = names[i] if names else f"param[{i}]"
            raise NonFiniteGradientError(f"non-finite gradient in {name}")


class SGD:
    def __init__(self, params: list[Tensor], lr: float, names=None):
        self.params, self.lr, self.names = list(params), lr, names

    def step(self):
        _check(self.params, self.names)
        for p in self.params:
            if p.grad is not None:
                p.data -= self.lr * p.grad

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


class AdamState:
    def __init__(self, shapes):
        self.step = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]


def adam_step(params, grads, state: AdamState, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, names=None):
    """One in-place Adam update of the arrays in ``params``."""
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            name = names[i] if names else f"param[{i}]"
            raise NonFiniteGradientError(f"non-finite gradient in {name}")
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


class Adam:
    def __init__(self, params: list[Tensor], lr=1e-3, betas=(0.9, 0.999), eps=1e-8, names=None):
        self.params = list(params)
        self.lr, self.betas, self.eps, self.names = lr, betas, eps, names
        self.state = AdamState([p.shape for p in self.params])

    def step(self):
        grads = [np.zeros(p.shape) if p.grad is None else p.grad for p in self.params]
        adam_step([p.data for p in self.params], grads, self.state, self.lr,
                  self.betas[0], self.betas[1], self.eps, self.names)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
