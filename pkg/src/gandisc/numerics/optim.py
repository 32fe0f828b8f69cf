"""Optimizers operating in place on parameter tensors."""

import numpy as np

from . import kernels


def _check(params, grads):
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        if p.data.shape != np.shape(g):
            raise ValueError(f"shape mismatch: param {p.data.shape} vs grad {np.shape(g)}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {p.name or 'parameter'}")


class Adam:
    """Bias-corrected Adam with one moment pair per parameter tensor."""

    def __init__(self, params, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("lr must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads=None):
        if grads is None:
            grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        _check(self.params, grads)
        self.t += 1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            kernels.adam_update(p.data, g, m, v, self.lr, self.beta1, self.beta2, self.eps, self.t)

    def state(self):
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state(self, state):
        self.t = int(state["t"])
        for dst, src in zip(self.m, state["m"]):
            dst[...] = src
        for dst, src in zip(self.v, state["v"]):
            dst[...] = src


def adam_step(params, grads, lr, beta1, beta2, eps, state):
    """Functional Adam: updates ``params`` (arrays) in place, returns the advanced state.

    ``state`` is ``None`` on the first call or the dict returned previously.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"shape mismatch: {np.shape(p)} vs {np.shape(g)}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    if state is None:
        state = {"t": 0, "m": [np.zeros_like(p) for p in params], "v": [np.zeros_like(p) for p in params]}
    t = state["t"] + 1
    for p, g, m, v in zip(params, grads, state["m"], state["v"]):
        kernels.adam_update(p, np.asarray(g, dtype=np.float64), m, v, lr, beta1, beta2, eps, t)
    state["t"] = t
    return params, state


class SGD:
    """Gradient descent with heavy-ball momentum."""

    def __init__(self, params, lr=2e-4, momentum=0.9):
        if lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.buf = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads=None):
        if grads is None:
            grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        _check(self.params, grads)
        for p, g, b in zip(self.params, grads, self.buf):
            kernels.momentum_update(p.data, g, b, self.lr, self.momentum)
