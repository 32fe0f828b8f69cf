"""Pure-numpy twins of the compiled kernels in ``_kernels.pyx``.

Each function performs the same floating point operations in the same order,
so results agree with the extension to the last bit on IEEE hardware.
"""

import numpy as np


def adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def momentum_update(p, g, buf, lr, momentum):
    buf *= momentum
    buf += g
    p -= lr * buf


def leaky_relu(x, slope):
    return np.where(x > 0.0, x, slope * x)


def leaky_relu_grad(x, g, slope):
    return np.where(x > 0.0, g, slope * g)


def softmax_rows(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)
