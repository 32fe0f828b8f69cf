import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gandisc import geometry
from gandisc.models import MlpSpec, build_classifier
from gandisc.numerics import SeededRng

from oracles import pinv_projector


def test_axis_head_split():
    A = np.array([[1.0, 0.0, 0.0]])
    dec = geometry.decompose_features(A, np.array([[2.0, 3.0, -1.0]]))
    np.testing.assert_allclose(dec.y_row, [[2.0, 0.0, 0.0]], atol=1e-15)
    np.testing.assert_allclose(dec.y_null, [[0.0, 3.0, -1.0]], atol=1e-15)


def test_null_fraction_for_single_output_head():
    A = SeededRng(0).normal(size=(1, 32))
    assert geometry.decompose_features(A, np.zeros((2, 32))).null_fraction == 31 / 32


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(4, 12), st.integers(0, 10**6))
def test_decomposition_matches_pseudoinverse(r, d, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(r, d))
    Y = rng.normal(size=(7, d))
    dec = geometry.decompose_features(A, Y)
    P = pinv_projector(A)
    np.testing.assert_allclose(dec.y_row, Y @ P, atol=1e-10)
    np.testing.assert_allclose(dec.y_row + dec.y_null, Y, atol=1e-12)
    assert np.abs((dec.y_row * dec.y_null).sum(axis=1)).max() < 1e-10


def test_row_constancy_metric_scales():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(1, 16))
    iso = geometry.decompose_features(A, rng.normal(size=(4000, 16)))
    assert geometry.row_constancy_metric(iso) == pytest.approx(1.0, abs=0.1)
    Y = rng.normal(size=(500, 16))
    b = iso.bases
    Y = Y @ b.null @ b.null.T + 3.0 * b.row[:, 0]
    assert geometry.row_constancy_metric(geometry.decompose_features(A, Y)) < 1e-6
    with pytest.raises(ValueError):
        geometry.row_constancy_metric(geometry.decompose_features(A, Y[:1]))


def test_softmax_shift_examples():
    flag, dev = geometry.softmax_shift_check([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])
    assert flag and dev <= 1e-12
    flag, _ = geometry.softmax_shift_check([0.0, 0.0], [1.0, 0.0])
    assert not flag


def test_softmax_iff_law():
    rng = np.random.default_rng(1)
    for i in range(500):
        k = rng.integers(2, 8)
        z = rng.normal(0, 2, k)
        c = np.full(k, rng.normal(0, 10)) if i % 2 else rng.normal(size=k)
        if i % 2 == 0:
            c /= np.linalg.norm(c)
        flag, _ = geometry.softmax_shift_check(z, c)
        assert flag == geometry.in_ones_span(c)


def test_classwise_two_point_example():
    rep = geometry.classwise_affine_residuals(np.array([[1.0, 0.0], [2.0, 1.0]]), [0, 0])
    lam = rep.lambdas[0]
    assert lam[1] - lam[0] == pytest.approx(1.0)
    assert rep.max_residual[0] == pytest.approx(0.0, abs=1e-15)


def test_classwise_needs_two_samples():
    with pytest.raises(ValueError):
        geometry.classwise_affine_residuals(np.zeros((3, 2)), [0, 0, 1])


def test_classwise_check_rejects_weak_classifier():
    clf = build_classifier(MlpSpec([2, 4, 3]), 3, SeededRng(0))
    x = SeededRng(1).normal(size=(30, 2))
    with pytest.raises(ValueError, match="accuracy"):
        geometry.classwise_affine_check(clf, x, np.arange(30) % 3, min_accuracy=0.99)


def test_ones_rowspace_component():
    A = np.array([[1.0, 0.0], [0.0, 2.0]])
    f = geometry.ones_rowspace_component(A)
    np.testing.assert_allclose(A @ f, [1.0, 1.0])
    assert geometry.ones_rowspace_component(np.array([[1.0, 0.0], [2.0, 0.0]])) is None
