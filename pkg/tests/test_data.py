import struct

import numpy as np
from scipy.integrate import trapezoid
import pytest

from gandisc.data import IdxFormatError, MixtureDensity, SyntheticDataset, build_dataset, read_idx, write_idx


def test_idx_round_trip(tmp_path):
    imgs = np.arange(2 * 3 * 4, dtype=np.uint8).reshape(2, 3, 4)
    write_idx(tmp_path / "i.idx", imgs)
    np.testing.assert_array_equal(read_idx(tmp_path / "i.idx", rescale=False), imgs.reshape(2, 12))
    labels = np.array([3, 1, 4], dtype=np.uint8)
    write_idx(tmp_path / "l.idx", labels)
    out = read_idx(tmp_path / "l.idx")
    assert out.dtype == np.int64 and out.tolist() == [3, 1, 4]


def test_idx_rescale_endpoints(tmp_path):
    write_idx(tmp_path / "i.idx", np.array([[[0, 255]]], dtype=np.uint8))
    np.testing.assert_array_equal(read_idx(tmp_path / "i.idx"), [[-1.0, 1.0]])


def test_idx_bad_magic(tmp_path):
    p = tmp_path / "bad.idx"
    p.write_bytes(struct.pack(">II", 0x0802, 1) + b"\0")
    with pytest.raises(IdxFormatError, match="0x00000802.*0x00000803"):
        read_idx(p)


def test_idx_truncated(tmp_path):
    p = tmp_path / "t.idx"
    p.write_bytes(struct.pack(">IIII", 0x0803, 2, 2, 2) + b"\0" * 5)
    with pytest.raises(IdxFormatError, match="truncated"):
        read_idx(p)


def test_ring_density_integrates_to_one():
    _, _, dens = build_dataset(SyntheticDataset(kind="gaussian-ring", n_components=8, radius=1.5, std=0.3))
    g = np.linspace(-3, 3, 601)
    gx, gy = np.meshgrid(g, g)
    vals = dens(np.stack([gx.ravel(), gy.ravel()], axis=1)).reshape(gx.shape)
    h = g[1] - g[0]
    assert trapezoid(trapezoid(vals, dx=h, axis=1), dx=h) == pytest.approx(1.0, abs=1e-3)


def test_single_gaussian_peak():
    s = 0.4
    dens = MixtureDensity([[0.5, -1.0]], [s], [1])
    assert dens([[0.5, -1.0]])[0] == pytest.approx(1.0 / (2 * np.pi * s**2))


def test_dataset_determinism_and_labels():
    spec = SyntheticDataset(kind="gaussian-grid", n_components=4, radius=2.0, std=0.1, count=50, seed=3)
    x1, y1, _ = build_dataset(spec)
    x2, y2, _ = build_dataset(spec)
    np.testing.assert_array_equal(x1, x2)
    assert np.bincount(y1).tolist() == [50] * 4
    means = spec.component_means()
    for k in range(4):
        np.testing.assert_allclose(x1[y1 == k].mean(axis=0), means[k], atol=0.05)


def test_dataset_validation():
    with pytest.raises(ValueError):
        SyntheticDataset(kind="spiral")
    with pytest.raises(ValueError):
        SyntheticDataset(kind="gaussian-grid", n_components=5).component_means()
    with pytest.raises(ValueError):
        SyntheticDataset(kind="labeled-clusters")
