"""Alternating-gradient training for plain GANs and M-GANs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .models import forward_classifier, forward_discriminator, sample_generator_mixture
from .numerics import Adam, SeededRng, Tensor, backward, no_grad
from .numerics import tensor as T
from .numerics.tensor import LOG_FLOOR


class TrainingDiverged(FloatingPointError):
    def __init__(self, step, what):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    epochs: int = 20
    steps: int | None = None
    real_batch: int = 120
    per_generator_batch: int = 12
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    beta: float = 0.02
    seed: int = 0
    generator_loss: str = "minimax"
    d_steps: int = 1

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.generator_loss not in ("minimax", "non-saturating"):
            raise ValueError(f"unknown generator loss {self.generator_loss!r}")
        if self.d_steps < 1:
            raise ValueError("d_steps must be >= 1")

    def total_steps(self, n_real):
        if self.steps is not None:
            return int(self.steps)
        return self.epochs * max(1, n_real // self.real_batch)

    def to_dict(self):
        return asdict(self)


@dataclass
class MetricsRecord:
    step: int
    d_loss: float
    g_loss: float
    c_loss: float
    d_real: float
    d_fake: float
    collapse: float
    floored: int

    def to_dict(self):
        return asdict(self)


def _count_floored(*arrays):
    return int(sum(np.count_nonzero(a <= LOG_FLOOR) for a in arrays))


def gan_losses(d_real, d_fake, variant="minimax"):
    """Discriminator and generator losses from D outputs.

    Accepts Tensors (returns Tensors) or arrays (returns floats).
    """
    if variant not in ("minimax", "non-saturating"):
        raise ValueError(f"unknown generator loss {variant!r}")
    if not isinstance(d_real, Tensor):
        r = np.asarray(d_real, dtype=np.float64)
        f = np.asarray(d_fake, dtype=np.float64)
        for name, a in (("D(real)", r), ("D(fake)", f)):
            if np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
                raise ValueError(f"{name} outside [0, 1]")
        lr = np.log(np.maximum(r, LOG_FLOOR))
        l1f = np.log(np.maximum(1.0 - f, LOG_FLOOR))
        d_loss = -lr.mean() - l1f.mean()
        if variant == "minimax":
            g_loss = l1f.mean()
        else:
            g_loss = -np.log(np.maximum(f, LOG_FLOOR)).mean()
        return float(d_loss), float(g_loss)
    d_loss = -T.log(d_real).mean() - T.log(1.0 - d_fake).mean()
    return d_loss, generator_adversarial_loss(d_fake, variant)


def generator_adversarial_loss(d_fake, variant="minimax"):
    if variant == "minimax":
        return T.log(1.0 - d_fake).mean()
    return -T.log(d_fake).mean()


def one_hot(labels, K):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"labels outside [0, {K})")
    out = np.zeros((labels.size, K))
    out[np.arange(labels.size), labels] = 1.0
    return out


def cross_entropy(targets, probs):
    """Mean over rows of ``-sum_i p_i log q_i`` with q floored at 1e-7.

    ``targets`` are one-hot rows; ``probs`` a Tensor or array of the same shape.
    """
    p = np.asarray(targets, dtype=np.float64)
    if isinstance(probs, Tensor):
        if probs.shape != p.shape:
            raise ValueError(f"targets {p.shape} vs probabilities {probs.shape}")
        return -(T.log(probs) * p).sum() * (1.0 / p.shape[0])
    q = np.asarray(probs, dtype=np.float64)
    if q.shape != p.shape:
        raise ValueError(f"targets {p.shape} vs probabilities {q.shape}")
    return float(-(p * np.log(np.maximum(q, LOG_FLOOR))).sum() / p.shape[0])


def mgan_losses(x_real, fake, labels, disc, clf, beta, variant="minimax"):
    """M-GAN objective terms for one batch.

    Returns ``(d_loss, g_loss, c_loss)``. ``c_loss`` is ``beta`` times the
    cross-entropy of the generator labels under the classifier; it enters
    both the classifier update and the generator loss.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    _, _, d_real = forward_discriminator(disc, x_real)
    _, _, d_fake = forward_discriminator(disc, fake)
    d_loss, g_adv = gan_losses(d_real, d_fake, variant)
    if clf is None:
        c_loss = Tensor(0.0)
    else:
        _, _, q = forward_classifier(clf, fake)
        c_loss = cross_entropy(one_hot(labels, clf.n_outputs), q) * beta
    return d_loss, g_adv + c_loss, c_loss


def collapse_estimate(d_real):
    """Coefficient of variation of the implied ratio 1/D - 1 over a real batch."""
    d = np.clip(np.asarray(d_real, dtype=np.float64), LOG_FLOOR, 1.0 - LOG_FLOOR)
    alpha = 1.0 / d - 1.0
    m = alpha.mean()
    return float(alpha.std() / m) if m > 0 else 0.0


class Trainer:
    """Owns the models, the three optimizers and the RNG streams of one run.

    The discriminator optimizer owns every discriminator parameter including
    the shared trunk; the classifier optimizer owns only classifier-specific
    parameters. Both are stepped from one backward pass of
    ``d_loss + c_loss`` so shared layers see the sum of both gradients.
    """

    def __init__(self, bank, disc, clf, x_real, config):
        self.bank = bank
        self.disc = disc
        self.clf = clf
        self.x_real = np.asarray(x_real, dtype=np.float64)
        self.config = config
        cfg = config
        self.opt_g = Adam(bank.parameters(), cfg.lr, cfg.beta1, cfg.beta2)
        self.opt_d = Adam(disc.parameters(), cfg.lr, cfg.beta1, cfg.beta2)
        self.c_params = []
        if clf is not None:
            d_ids = {id(p) for p in disc.parameters()}
            self.c_params = [p for p in clf.parameters() if id(p) not in d_ids]
        self.opt_c = Adam(self.c_params, cfg.lr, cfg.beta1, cfg.beta2) if self.c_params else None
        self.data_rng = SeededRng(cfg.seed, 1)
        self.step_index = 0
        self._order = np.empty(0, dtype=np.int64)
        self._cursor = 0

    def _zero_grad(self):
        for p in self.opt_g.params + self.opt_d.params + self.c_params:
            p.grad = None

    def _real_batch(self):
        n = len(self.x_real)
        b = min(self.config.real_batch, n)
        if self._cursor + b > len(self._order):
            self._order = self.data_rng.permutation(n)
            self._cursor = 0
        idx = self._order[self._cursor:self._cursor + b]
        self._cursor += b
        return self.x_real[idx]

    def _fake_batch_size(self):
        return self.config.per_generator_batch * self.bank.K

    def step(self):
        cfg = self.config
        step = self.step_index
        for _ in range(cfg.d_steps):
            xr = Tensor(self._real_batch())
            with no_grad():
                fake, labels, z = sample_generator_mixture(self.bank, self._fake_batch_size(), self.data_rng)
            d_loss, _, c_loss = mgan_losses(xr, fake, labels, self.disc, self.clf, cfg.beta, cfg.generator_loss)
            if not (math.isfinite(d_loss.item()) and math.isfinite(c_loss.item())):
                raise TrainingDiverged(step, "discriminator/classifier loss")
            self._zero_grad()
            backward(d_loss + c_loss if self.clf is not None else d_loss)
            self.opt_d.step()
            if self.opt_c is not None:
                self.opt_c.step()

        fake, labels, _ = sample_generator_mixture(self.bank, self._fake_batch_size(), self.data_rng, z=z)
        _, _, d_fake = forward_discriminator(self.disc, fake)
        g_loss = generator_adversarial_loss(d_fake, cfg.generator_loss)
        if self.clf is not None:
            _, _, q = forward_classifier(self.clf, fake)
            g_loss = g_loss + cross_entropy(one_hot(labels, self.clf.n_outputs), q) * cfg.beta
        if not math.isfinite(g_loss.item()):
            raise TrainingDiverged(step, "generator loss")
        self._zero_grad()
        backward(g_loss)
        self.opt_g.step()

        with no_grad():
            _, _, dr = forward_discriminator(self.disc, xr)
        rec = MetricsRecord(
            step=step,
            d_loss=d_loss.item(),
            g_loss=g_loss.item(),
            c_loss=c_loss.item(),
            d_real=float(dr.data.mean()),
            d_fake=float(d_fake.data.mean()),
            collapse=collapse_estimate(dr.data),
            floored=_count_floored(dr.data, 1.0 - dr.data, d_fake.data, 1.0 - d_fake.data),
        )
        for p in self.opt_g.params + self.opt_d.params:
            if not np.all(np.isfinite(p.data)):
                raise TrainingDiverged(step, f"parameter {p.name}")
        self.step_index += 1
        return rec

    def run(self, n_steps=None, callback=None):
        n = n_steps if n_steps is not None else self.config.total_steps(len(self.x_real))
        records = []
        for _ in range(n):
            rec = self.step()
            records.append(rec)
            if callback is not None:
                callback(rec)
        return records


def train(models, x_real, config, n_steps=None, callback=None):
    """Train ``models = (bank, disc, clf_or_None)``; returns ``(models, metrics)``."""
    bank, disc, clf = models
    trainer = Trainer(bank, disc, clf, x_real, config)
    return (bank, disc, clf), trainer.run(n_steps, callback)


def train_discriminator(disc, sample_real, sample_fake, steps, lr=2e-4, beta1=0.5, beta2=0.999, batch=120):
    """Fit a discriminator against a fixed fake source.

    ``sample_real(n)`` and ``sample_fake(n)`` return ``(n, dim)`` arrays.
    """
    opt = Adam(disc.parameters(), lr, beta1, beta2)
    losses = []
    for _ in range(steps):
        xr = Tensor(sample_real(batch))
        xf = Tensor(sample_fake(batch))
        _, _, dr = forward_discriminator(disc, xr)
        _, _, df = forward_discriminator(disc, xf)
        d_loss, _ = gan_losses(dr, df)
        backward(d_loss)
        opt.step()
        losses.append(d_loss.item())
    return losses


def train_classifier(clf, x, y, steps, lr=2e-4, beta1=0.5, beta2=0.999, batch=120, rng=None):
    """Supervised cross-entropy training with Adam on minibatches."""
    rng = rng or SeededRng(0)
    opt = Adam(clf.parameters(), lr, beta1, beta2)
    targets = one_hot(y, clf.n_outputs)
    losses = []
    n = len(x)
    for _ in range(steps):
        idx = rng.integers(0, n, size=min(batch, n))
        _, _, q = forward_classifier(clf, Tensor(x[idx]))
        loss = cross_entropy(targets[idx], q)
        backward(loss)
        opt.step()
        losses.append(loss.item())
    return losses
