"""Synthetic Gaussian-mixture datasets and the IDX (MNIST) reader."""

from __future__ import annotations

import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .numerics import SeededRng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    pass


@dataclass
class SyntheticDataset:
    """Isotropic Gaussian mixture; component ``i`` gets label ``i``.

    ``kind`` picks how means are laid out when ``means`` is empty:
    ``gaussian-ring`` (``n_components`` on a circle of ``radius``),
    ``gaussian-grid`` (square grid with spacing ``radius``), or
    ``labeled-clusters`` (explicit ``means``).
    """

    kind: str = "gaussian-ring"
    n_components: int = 8
    radius: float = 2.0
    std: float = 0.05
    count: int = 250
    means: list[list[float]] = field(default_factory=list)
    stds: list[float] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian-ring", "gaussian-grid", "labeled-clusters"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "labeled-clusters" and not self.means:
            raise ValueError("labeled-clusters needs explicit means")

    def component_means(self):
        if self.means:
            return np.asarray(self.means, dtype=np.float64)
        k = self.n_components
        if self.kind == "gaussian-ring":
            ang = 2.0 * np.pi * np.arange(k) / k
            return self.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        side = int(round(np.sqrt(k)))
        if side * side != k:
            raise ValueError("gaussian-grid needs a square number of components")
        ax = (np.arange(side) - (side - 1) / 2.0) * self.radius
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def component_stds(self):
        k = len(self.component_means())
        stds = np.asarray(self.stds if self.stds else [self.std] * k, dtype=np.float64)
        if len(stds) != k:
            raise ValueError("one std per component")
        if np.any(stds <= 0):
            raise ValueError("stds must be positive")
        return stds

    def component_counts(self):
        k = len(self.component_means())
        counts = np.asarray(self.counts if self.counts else [self.count] * k, dtype=np.int64)
        if len(counts) != k:
            raise ValueError("one count per component")
        if np.any(counts <= 0):
            raise ValueError("counts must be positive")
        return counts

    def to_dict(self):
        return asdict(self)


class MixtureDensity:
    """Closed-form density of an isotropic Gaussian mixture."""

    def __init__(self, means, stds, weights):
        self.means = np.asarray(means, dtype=np.float64)
        self.stds = np.asarray(stds, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        self.weights = w / w.sum()

    @property
    def dim(self):
        return self.means.shape[1]

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        d = self.dim
        sq = ((x[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        norm = (2.0 * np.pi * self.stds**2) ** (-d / 2.0)
        return (self.weights * norm * np.exp(-0.5 * sq / self.stds**2)).sum(axis=1)


def build_dataset(spec):
    """Returns ``(samples, labels, density)``. Deterministic in ``spec.seed``."""
    means = spec.component_means()
    stds = spec.component_stds()
    counts = spec.component_counts()
    rng = SeededRng(spec.seed)
    xs, ys = [], []
    for i, (mu, s, n) in enumerate(zip(means, stds, counts)):
        xs.append(mu + s * rng.normal(size=(int(n), means.shape[1])))
        ys.append(np.full(int(n), i, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(len(x))
    return x[perm], y[perm], MixtureDensity(means, stds, counts)


def split(x, y, frac, rng):
    """Shuffle and split into ``(x_train, y_train, x_val, y_val)``."""
    perm = rng.permutation(len(x))
    n_train = int(round(frac * len(x)))
    tr, va = perm[:n_train], perm[n_train:]
    return x[tr], y[tr], x[va], y[va]


def read_idx(path, rescale=True):
    """Parse an IDX file (MNIST layout).

    Images (magic 0x803) come back as ``(n, rows*cols)`` float64 in [-1, 1]
    when ``rescale`` is set; labels (magic 0x801) as int64.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise IdxFormatError(f"{path}: file too short for an IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic == IDX_IMAGES_MAGIC:
        if len(raw) < 16:
            raise IdxFormatError(f"{path}: truncated image header")
        n, rows, cols = struct.unpack(">III", raw[4:16])
        need = n * rows * cols
        payload = raw[16:]
        if len(payload) < need:
            raise IdxFormatError(f"{path}: truncated payload, expected {need} bytes, got {len(payload)}")
        px = np.frombuffer(payload, dtype=np.uint8, count=need).reshape(n, rows * cols)
        if not rescale:
            return px.copy()
        return px.astype(np.float64) / 127.5 - 1.0
    if magic == IDX_LABELS_MAGIC:
        n = struct.unpack(">I", raw[4:8])[0]
        payload = raw[8:]
        if len(payload) < n:
            raise IdxFormatError(f"{path}: truncated payload, expected {n} bytes, got {len(payload)}")
        return np.frombuffer(payload, dtype=np.uint8, count=n).astype(np.int64)
    raise IdxFormatError(
        f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x} (images) "
        f"or 0x{IDX_LABELS_MAGIC:08x} (labels)"
    )


def write_idx(path, array):
    """Write uint8 images ``(n, rows, cols)`` or labels ``(n,)`` as IDX."""
    a = np.asarray(array, dtype=np.uint8)
    with open(path, "wb") as fh:
        if a.ndim == 3:
            fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *a.shape))
        elif a.ndim == 1:
            fh.write(struct.pack(">II", IDX_LABELS_MAGIC, a.shape[0]))
        else:
            raise ValueError("expected (n, rows, cols) images or (n,) labels")
        fh.write(a.tobytes())
