"""Fast invariant suites run by ``gandisc check``.

Each suite returns ``(ok, detail)``. They sample random instances from a
fixed seed, so a failure is reproducible.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from . import geometry, simplex
from .checkpoint import load_checkpoint, save_checkpoint
from .models import MlpSpec, SharingConfig, build_mgan, forward_discriminator
from .numerics import SeededRng, Tensor, backward, no_grad, row_null_basis
from .numerics import tensor as T


def _rand_density(rng, n, sparse=False):
    w = rng.dirichlet(np.ones(n))
    if sparse and n > 1:
        w[rng.integers(0, n)] = 0.0
    return simplex.DiscreteDensity(w / w.sum())


def gradient_check(params, loss_fn, h=1e-5):
    """Max relative error between autodiff and central differences."""
    loss = loss_fn()
    backward(loss)
    auto = [p.grad.copy() for p in params]
    worst = 0.0
    for p, g in zip(params, auto):
        flat = p.data.reshape(-1)
        num = np.empty_like(flat)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            with no_grad():
                up = loss_fn().item()
            flat[i] = old - h
            with no_grad():
                dn = loss_fn().item()
            flat[i] = old
            num[i] = (up - dn) / (2 * h)
        err = np.abs(num - g.reshape(-1)) / np.maximum(np.abs(num) + np.abs(g.reshape(-1)), 1e-6)
        worst = max(worst, float(err.max()))
    return worst


def random_mlp_loss(rng, n_in=3, hidden=5, n_out=2, batch=4):
    W1 = Tensor(rng.normal(0, 1, (n_in, hidden)), requires_grad=True)
    b1 = Tensor(rng.normal(0, 1, hidden), requires_grad=True)
    W2 = Tensor(rng.normal(0, 1, (hidden, n_out)), requires_grad=True)
    x = Tensor(rng.normal(0, 1, (batch, n_in)))
    onehot = np.eye(n_out)[rng.integers(0, n_out, batch)]

    def loss():
        h = T.leaky_relu(x @ W1 + b1, 0.2)
        q = T.softmax(T.tanh(h) @ W2)
        return -(T.log(q) * onehot).sum() * (1.0 / batch) + T.sigmoid(h).mean()

    return [W1, b1, W2], loss


def suite_autodiff(n=5):
    rng = SeededRng(11)
    worst = max(gradient_check(*random_mlp_loss(rng.child(i))) for i in range(n))
    return worst < 1e-4, f"max relative error {worst:.2e}"


def suite_bases(n=20):
    rng = SeededRng(12)
    worst = 0.0
    for _ in range(n):
        r, c = int(rng.integers(1, 5)), int(rng.integers(1, 8))
        A = rng.normal(size=(r, c))
        if rng.uniform() < 0.3 and r > 1:
            A[-1] = A[0]
        b = row_null_basis(A)
        recon = A @ b.row @ b.row.T
        worst = max(worst, np.abs(recon - A).max() / max(np.abs(A).max(), 1e-300))
        if b.null_dim:
            worst = max(worst, np.linalg.norm(A @ b.null) / np.linalg.norm(A))
        if b.rank + b.null_dim != c:
            return False, "rank-nullity violated"
    return worst <= 1e-8, f"max basis error {worst:.2e}"


def suite_simplex(n=100):
    rng = SeededRng(13)
    worst_id, worst_val = 0.0, 0.0
    for _ in range(n):
        k = int(rng.integers(2, 6))
        pr, pg = _rand_density(rng, k), _rand_density(rng, k, sparse=True)
        d = simplex.optimal_discriminator(pr, pg)
        mask = simplex.union_support(pr, pg)
        on_r = pr.supp()[mask]
        d_alpha = simplex.discriminator_from_alpha(simplex.alpha_ratio(pr, pg))
        worst_id = max(worst_id, float(np.abs(d[on_r] - d_alpha).max()))
        worst_val = max(worst_val, abs(simplex.gan_value_direct(pr, pg) - simplex.gan_value_decomposed(pr, pg)))
        if simplex.gan_value_direct(pr, pg) < -simplex.LOG4 - 1e-12:
            return False, "value below -log 4"
        if simplex.collapse_metric(pr, pg) > 0:
            br = simplex.generator_best_response(pr, pg)
            if not np.all(br.supp() <= pr.supp()) or br.supp().sum() >= pr.supp().sum():
                return False, "collapse law violated"
    ok = worst_id <= 1e-12 and worst_val <= 1e-10
    return ok, f"D* identity {worst_id:.1e}, value identity {worst_val:.1e}"


def suite_softmax(n=1000):
    rng = SeededRng(14)
    for i in range(n):
        k = int(rng.integers(2, 8))
        z = rng.normal(0, 2, k)
        if i % 2:
            c = np.full(k, rng.normal(0, 5))
        else:
            c = rng.normal(size=k)
            c /= np.linalg.norm(c)
        flag, _ = geometry.softmax_shift_check(z, c)
        if flag != geometry.in_ones_span(c):
            return False, f"iff-law broken at sample {i}"
    return True, f"{n} pairs agree"


def suite_decomposition(n=20):
    rng = SeededRng(15)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 33))
        A = rng.normal(size=(int(rng.integers(1, min(d, 4) + 1)), d))
        Y = rng.normal(size=(10, d))
        dec = geometry.decompose_features(A, Y)
        worst = max(worst, float(np.abs(dec.y_row + dec.y_null - Y).max() / np.abs(Y).max()))
        worst = max(worst, float(np.abs((dec.y_row * dec.y_null).sum(axis=1)).max()))
    A = rng.normal(size=(1, 32))
    frac = geometry.decompose_features(A, rng.normal(size=(3, 32))).null_fraction
    ok = worst <= 1e-8 and frac == 31 / 32
    return ok, f"max decomposition error {worst:.1e}, 1x32 null fraction {frac}"


def suite_checkpoint():
    rng = SeededRng(16)
    g = MlpSpec([2, 8, 2], activation="relu")
    e = MlpSpec([2, 8, 8, 4])
    bank, disc, clf = build_mgan(g, e, 2, SharingConfig(3, 1), rng)
    x = rng.normal(size=(5, 2))
    with no_grad():
        before = forward_discriminator(disc, x)[2].data
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "m.ckpt"
        save_checkpoint(path, bank, disc, clf, SharingConfig(3, 1), g, e)
        _, disc2, clf2, _, _, _ = load_checkpoint(path)
    with no_grad():
        after = forward_discriminator(disc2, x)[2].data
    aliased = disc2.extractor.layers[0] is clf2.extractor.layers[0]
    ok = np.array_equal(before, after) and aliased
    return ok, "round trip exact" if ok else "round trip mismatch"


SUITES = {
    "autodiff": suite_autodiff,
    "bases": suite_bases,
    "simplex": suite_simplex,
    "softmax": suite_softmax,
    "decomposition": suite_decomposition,
    "checkpoint": suite_checkpoint,
}


def run_all(names=None):
    results = []
    for name in names or SUITES:
        try:
            ok, detail = SUITES[name]()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
