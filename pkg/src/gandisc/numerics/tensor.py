"""A small reverse-mode autodiff engine over float64 numpy arrays.

Graphs are built eagerly by the operations below and consumed by
:func:`backward`. Broadcasting is limited to what the models need: scalars
and a trailing-axis row vector (a bias) added to a batch.
"""

from __future__ import annotations

import contextlib

import numpy as np

from . import kernels

LOG_FLOOR = 1e-7

_grad_enabled = True


class AutodiffError(RuntimeError):
    pass


@contextlib.contextmanager
def no_grad():
    """Evaluate operations without recording them."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data.copy())

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other)))

    def __rsub__(self, other):
        return add(_as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)

    def sum(self):
        return tsum(self)

    def mean(self):
        return mean(self)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    if len(shape) == 0:
        return np.asarray(g.sum())
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), bw)


def neg(a):
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), bw)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def bw(g):
        return g @ b.data.T, a.data.T @ g

    return _make(a.data @ b.data, (a, b), bw)


def transpose(a):
    if a.data.ndim != 2:
        raise ValueError("transpose expects a 2-D tensor")
    return _make(a.data.T.copy(), (a,), lambda g: (g.T,))


def tsum(a):
    return _make(np.asarray(a.data.sum()), (a,), lambda g: (np.full(a.shape, float(g)),))


def mean(a):
    n = a.data.size
    return _make(np.asarray(a.data.mean()), (a,), lambda g: (np.full(a.shape, float(g) / n),))


def sum_rows(a):
    """Sum over the last axis of a 2-D tensor, keeping a column."""
    return _make(a.data.sum(axis=1, keepdims=True), (a,),
                 lambda g: (np.broadcast_to(g, a.shape).copy(),))


def leaky_relu(a, slope=0.2):
    return _make(kernels.leaky_relu(a.data, slope), (a,),
                 lambda g: (kernels.leaky_relu_grad(a.data, g, slope),))


def relu(a):
    return leaky_relu(a, 0.0)


def tanh(a):
    y = np.tanh(a.data)
    return _make(y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a):
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _make(y, (a,), lambda g: (g * y * (1.0 - y),))


def log(a, floor=LOG_FLOOR):
    """Natural log with the argument floored at ``floor``; no gradient below it."""
    x = a.data
    live = x > floor
    safe = np.where(live, x, floor)
    return _make(np.log(safe), (a,), lambda g: (np.where(live, g / safe, 0.0),))


def exp(a):
    y = np.exp(a.data)
    return _make(y, (a,), lambda g: (g * y,))


def softmax(a):
    """Row-wise softmax of a 2-D tensor."""
    s = kernels.softmax_rows(a.data)

    def bw(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _make(s, (a,), bw)


def concat(tensors):
    """Stack 2-D tensors along the batch axis."""
    tensors = tuple(tensors)
    sizes = [t.shape[0] for t in tensors]
    edges = np.cumsum([0] + sizes)

    def bw(g):
        return tuple(g[edges[i]:edges[i + 1]] for i in range(len(tensors)))

    return _make(np.concatenate([t.data for t in tensors], axis=0), tensors, bw)


def backward(loss):
    """Back-propagate a scalar loss and consume its graph.

    Every leaf reached that requires a gradient gets ``.grad`` overwritten
    with d(loss)/d(leaf). Returns ``{leaf: grad}``.
    """
    if not isinstance(loss, Tensor):
        raise TypeError("backward expects a Tensor")
    if loss.data.size != 1:
        raise AutodiffError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._consumed:
        raise AutodiffError("graph already consumed by an earlier backward()")
    if not loss.requires_grad:
        raise AutodiffError("loss is detached: no recorded operation depends on a parameter")
    if loss.is_leaf:
        loss.grad = np.ones_like(loss.data)
        return {loss: loss.grad}

    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        if node._consumed:
            raise AutodiffError("graph contains an intermediate from an already consumed tape")
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    leaves = {}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            leaves[node] = g
            continue
        for p, gp in zip(node._parents, node._backward(g)):
            if not p.requires_grad or gp is None:
                continue
            key = id(p)
            if key in grads:
                grads[key] = grads[key] + gp
            else:
                grads[key] = np.asarray(gp, dtype=np.float64)

    for node in order:
        if not node.is_leaf:
            node._parents = ()
            node._backward = None
            node._consumed = True
    for leaf, g in leaves.items():
        if not np.all(np.isfinite(g)):
            raise AutodiffError(f"non-finite gradient for {leaf.name or 'parameter'}")
        leaf.grad = g
    return leaves
