"""Independent reference computations used to freeze expected values.

Nothing here imports the code under test.
"""

import itertools
from functools import lru_cache

import numpy as np


def gauss_rank(A, tol=1e-10):
    """Rank by Gaussian elimination with partial pivoting."""
    M = np.array(A, dtype=np.float64, copy=True)
    rows, cols = M.shape
    scale = max(np.abs(M).max(), 1e-300)
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        piv = rank + int(np.argmax(np.abs(M[rank:, c])))
        if abs(M[piv, c]) <= tol * scale:
            continue
        M[[rank, piv]] = M[[piv, rank]]
        M[rank + 1:] -= np.outer(M[rank + 1:, c] / M[rank, c], M[rank])
        rank += 1
    return rank


@lru_cache(maxsize=None)
def simplex_grid(n, m):
    """All points of the probability simplex in R^n with coordinates in {0, 1/m, ..., 1}."""
    pts = []
    for bars in itertools.combinations(range(m + n - 1), n - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(m + n - 2 - prev)
        pts.append(comp)
    return np.asarray(pts, dtype=np.float64) / m


def grid_best_response(p_r, p_g0, m):
    """Brute-force minimisation of sum p_g log(a0/(a0+1)) over the simplex on Supp(p_r).

    Returns ``(min value, mask of points carrying mass in some minimiser)``.
    """
    p_r = np.asarray(p_r, dtype=np.float64)
    p_g0 = np.asarray(p_g0, dtype=np.float64)
    sr = p_r > 0
    a = p_g0[sr] / p_r[sr]
    with np.errstate(divide="ignore"):
        coef = np.log(a / (a + 1.0))
    G = simplex_grid(int(sr.sum()), m)
    with np.errstate(invalid="ignore"):
        vals = np.where(G > 0, G * coef, 0.0).sum(axis=1)
    best = vals.min()
    if np.isfinite(best):
        hit = np.abs(vals - best) <= 1e-12 * max(1.0, abs(best))
    else:
        hit = vals == best
    used = (G[hit] > 0).any(axis=0)
    mask = np.zeros(len(p_r), dtype=bool)
    mask[np.flatnonzero(sr)[used]] = True
    return best, mask


def pinv_projector(A):
    """Row-space projector A^T (A A^T)^{-1} A for full-row-rank A."""
    A = np.atleast_2d(A)
    return A.T @ np.linalg.inv(A @ A.T) @ A


def central_difference(f, x, h=1e-5):
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f(x)
        flat[i] = old - h
        dn = f(x)
        flat[i] = old
        gf[i] = (up - dn) / (2 * h)
    return g


def np_mlp_forward(x, W1, b1, W2, slope=0.2):
    """Plain-numpy two-layer perceptron with a sigmoid-mean readout."""
    h = x @ W1 + b1
    h = np.where(h > 0, h, slope * h)
    y = h @ W2
    return float((1.0 / (1.0 + np.exp(-y))).mean())
