"""Row/null-space analysis of trained heads and their features."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .models import forward_classifier, forward_discriminator
from .numerics import SubspaceBases, no_grad, row_null_basis
from .numerics import kernels
from .numerics.linalg import DEFAULT_RANK_TOL

SHIFT_TOL = 1e-10
ONES_TOL = 1e-8


@dataclass
class SubspaceDecomposition:
    bases: SubspaceBases
    y_row: np.ndarray
    y_null: np.ndarray
    c: np.ndarray

    @property
    def n_samples(self):
        return self.y_row.shape[0]

    @property
    def null_fraction(self):
        return self.bases.null_dim / self.bases.dim


def decompose_features(A, Y, tol=DEFAULT_RANK_TOL):
    """Split each row of ``Y`` into its row-space and null-space parts w.r.t. ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if Y.shape[1] != A.shape[1]:
        raise ValueError(f"features have width {Y.shape[1]}, head expects {A.shape[1]}")
    bases = row_null_basis(A, tol)
    y_row = (Y @ bases.row) @ bases.row.T
    y_null = Y - y_row
    return SubspaceDecomposition(bases, y_row, y_null, y_row.mean(axis=0))


def row_constancy_metric(dec):
    """Per-direction spread in the row space over that in the null space.

    Spread along a subspace is the RMS of the per-coordinate standard
    deviations in an orthonormal basis of it, so isotropic features score 1
    whatever the subspace dimensions.
    """
    if dec.n_samples < 2:
        raise ValueError("row constancy needs at least two samples")
    b = dec.bases
    row_coords = dec.y_row @ b.row
    null_coords = dec.y_null @ b.null
    num = np.sqrt(row_coords.var(axis=0).mean()) if b.rank else 0.0
    den = np.sqrt(null_coords.var(axis=0).mean()) if b.null_dim else 0.0
    return float(num / (den + 1e-12))


def discriminator_invariance(net, x):
    """Mean and standard deviation of ``D(x)`` over a batch."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty batch")
    with no_grad():
        _, _, d = forward_discriminator(net, x)
    return float(d.data.mean()), float(d.data.std())


def softmax(z):
    return kernels.softmax_rows(np.atleast_2d(np.asarray(z, dtype=np.float64)))


def softmax_shift_check(z, c, tol=SHIFT_TOL):
    """``(max|softmax(z + c) - softmax(z)| <= tol, that deviation)``."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if z.shape != c.shape or z.size < 2:
        raise ValueError("z and c must be vectors of equal length >= 2")
    dev = float(np.max(np.abs(softmax(z + c) - softmax(z))))
    return dev <= tol, dev


def in_ones_span(c, tol=SHIFT_TOL):
    c = np.asarray(c, dtype=np.float64)
    return float(np.linalg.norm(c - c.mean())) <= tol


@dataclass
class ClasswiseReport:
    classes: list[int]
    max_residual: dict[int, float]
    lambdas: dict[int, np.ndarray]
    class_means: dict[int, np.ndarray]
    separation: float
    accuracy: float = float("nan")

    @property
    def worst_residual(self):
        return max(self.max_residual.values())

    def to_dict(self):
        return {
            "classes": self.classes,
            "max_residual": {str(k): v for k, v in self.max_residual.items()},
            "separation": self.separation,
            "worst_residual": self.worst_residual,
            "accuracy": self.accuracy,
            "lambda_range": {str(k): [float(v.min()), float(v.max())] for k, v in self.lambdas.items()},
        }


def classwise_affine_residuals(Y, labels):
    """Fit ``y_j ~ ybar_i + lambda_j 1`` within each class.

    ``lambda_j`` is the mean coordinate of ``y_j - ybar_i`` and the residual
    is ``||y_j - ybar_i - lambda_j 1||``. Separation is the smallest
    distance between class means after removing the ones direction.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    labels = np.asarray(labels)
    classes = sorted(int(k) for k in np.unique(labels))
    max_res, lams, means = {}, {}, {}
    for k in classes:
        Yk = Y[labels == k]
        if len(Yk) < 2:
            raise ValueError(f"class {k} has fewer than 2 samples")
        m = Yk.mean(axis=0)
        r = Yk - m
        lam = r.mean(axis=1)
        res = np.linalg.norm(r - lam[:, None], axis=1)
        max_res[k] = float(res.max())
        lams[k] = lam
        means[k] = m
    n = Y.shape[1]
    P = np.eye(n) - np.full((n, n), 1.0 / n)
    sep = float("inf")
    for i in classes:
        for k in classes:
            if i < k:
                sep = min(sep, float(np.linalg.norm(P @ (means[i] - means[k]))))
    return ClasswiseReport(classes, max_res, lams, means, sep)


def classwise_affine_check(clf, x, labels, min_accuracy=0.9):
    """Residual table for a trained classifier on a labeled batch.

    Raises when the classifier is below ``min_accuracy``: the within-class
    structure is only expected near the optimum.
    """
    with no_grad():
        _, y, q = forward_classifier(clf, np.asarray(x, dtype=np.float64))
    acc = float((q.data.argmax(axis=1) == np.asarray(labels)).mean())
    if acc < min_accuracy:
        raise ValueError(f"classifier accuracy {acc:.4f} below threshold {min_accuracy}")
    rep = classwise_affine_residuals(y.data, labels)
    rep.accuracy = acc
    return rep


def ones_rowspace_component(A, b=None, tol=ONES_TOL):
    """Row-space preimage of the ones vector under ``A``, or ``None``.

    ``b`` does not enter the solve; it is accepted so callers can pass a
    classifier head as is.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    ones = np.ones(A.shape[0])
    f, *_ = np.linalg.lstsq(A, ones, rcond=None)
    if np.linalg.norm(A @ f - ones) > tol:
        return None
    bases = row_null_basis(A)
    return bases.row @ (bases.row.T @ f)


@dataclass
class GeometryReport:
    row_constancy: float
    null_fraction: float
    feature_dim: int
    head_rank: int
    d_mean: float
    d_std: float
    classwise: dict | None = None
    ones_component_norm: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.null_fraction <= 1.0:
            raise ValueError("null fraction outside [0, 1]")
        if self.d_std < 0 or self.row_constancy < 0:
            raise ValueError("spreads are non-negative")

    def to_dict(self):
        return asdict(self)


def geometry_report(disc, x_real, clf=None, x_labeled=None, y_labeled=None, min_accuracy=0.0):
    x_real = np.asarray(x_real, dtype=np.float64)
    with no_grad():
        feats, _, _ = forward_discriminator(disc, x_real)
    dec = decompose_features(disc.head.data, feats.data)
    d_mean, d_std = discriminator_invariance(disc, x_real)
    rep = GeometryReport(
        row_constancy=row_constancy_metric(dec),
        null_fraction=dec.null_fraction,
        feature_dim=dec.bases.dim,
        head_rank=dec.bases.rank,
        d_mean=d_mean,
        d_std=d_std,
    )
    if clf is not None:
        f1 = ones_rowspace_component(clf.head.data)
        rep.ones_component_norm = None if f1 is None else float(np.linalg.norm(f1))
        if x_labeled is not None:
            try:
                rep.classwise = classwise_affine_check(clf, x_labeled, y_labeled, min_accuracy).to_dict()
            except ValueError as exc:
                rep.extras["classwise_error"] = str(exc)
    return rep
