"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy twins.
Set ``GANDISC_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GANDISC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def _flat(a):
    return a.reshape(-1)


def adam_update(p, g, m, v, lr, beta1, beta2, eps, step):
    """In-place bias-corrected Adam update on contiguous float64 arrays."""
    bc1 = 1.0 - beta1**step
    bc2 = 1.0 - beta2**step
    _impl.adam_update(_flat(p), _flat(np.ascontiguousarray(g)), _flat(m), _flat(v),
                      lr, beta1, beta2, eps, bc1, bc2)


def momentum_update(p, g, buf, lr, momentum):
    _impl.momentum_update(_flat(p), _flat(np.ascontiguousarray(g)), _flat(buf), lr, momentum)


def leaky_relu(x, slope):
    x = np.ascontiguousarray(x)
    return np.asarray(_impl.leaky_relu(_flat(x), slope)).reshape(x.shape)


def leaky_relu_grad(x, g, slope):
    x = np.ascontiguousarray(x)
    g = np.ascontiguousarray(g)
    return np.asarray(_impl.leaky_relu_grad(_flat(x), _flat(g), slope)).reshape(x.shape)


def softmax_rows(z):
    return np.asarray(_impl.softmax_rows(np.ascontiguousarray(z, dtype=np.float64)))
