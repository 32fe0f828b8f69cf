"""Row-space / null-space bases and projections."""

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-8


@dataclass(frozen=True)
class SubspaceBases:
    row: np.ndarray   # (n, rank), orthonormal columns
    null: np.ndarray  # (n, n - rank), orthonormal columns
    rank: int
    tol: float

    @property
    def dim(self):
        return self.row.shape[0]

    @property
    def null_dim(self):
        return self.null.shape[1]


def row_null_basis(A, tol=DEFAULT_RANK_TOL):
    """Orthonormal bases for the row space and null space of ``A``.

    Singular values at or below ``tol * s_max`` count as zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise ValueError(f"degenerate matrix shape {A.shape}")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    n = A.shape[1]
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return SubspaceBases(row=vt[:rank].T.copy(), null=vt[rank:].T.copy(), rank=rank, tol=tol)


def project(Y, basis):
    """Orthogonal projection of the rows of ``Y`` onto span(basis columns)."""
    Y = np.asarray(Y, dtype=np.float64)
    return (Y @ basis) @ basis.T
