"""Decomposed networks: extractor + final linear head + output nonlinearity.

A discriminator is ``D(x) = sigmoid(A f(x))`` with a bias-free 1 x d head.
A classifier is ``softmax(A f(x) + b)`` with a K x d head. In an M-GAN the
two extractors may alias their first layers (the shared trunk).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import SeededRng, Tensor
from .numerics import tensor as T

INIT_STD = 0.02
LEAKY_SLOPE = 0.2


@dataclass
class MlpSpec:
    """Layer widths from input to output, e.g. ``[2, 64, 64, 32]``."""

    widths: list[int]
    activation: str = "leaky_relu"
    slope: float = LEAKY_SLOPE
    init_std: float = INIT_STD
    bias: list[bool] | None = None
    output_activation: str = "linear"

    def __post_init__(self):
        self.widths = [int(w) for w in self.widths]
        if len(self.widths) < 3:
            raise ValueError("an MLP needs an input width, at least one hidden layer and an output width")
        if any(w < 1 for w in self.widths):
            raise ValueError(f"all widths must be >= 1, got {self.widths}")
        if self.bias is None:
            self.bias = [True] * self.depth
        if len(self.bias) != self.depth:
            raise ValueError("one bias flag per layer")
        if self.activation not in ("leaky_relu", "relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.output_activation not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @property
    def depth(self):
        return len(self.widths) - 1


class Linear:
    def __init__(self, n_in, n_out, rng, std=INIT_STD, bias=True, name="linear"):
        self.name = name
        self.W = Tensor(rng.normal(0.0, std, size=(n_in, n_out)), requires_grad=True, name=f"{name}.W")
        self.b = Tensor(np.zeros(n_out), requires_grad=True, name=f"{name}.b") if bias else None

    @property
    def n_in(self):
        return self.W.shape[0]

    @property
    def n_out(self):
        return self.W.shape[1]

    def parameters(self):
        return [self.W] if self.b is None else [self.W, self.b]

    def __call__(self, x):
        y = x @ self.W
        return y if self.b is None else y + self.b


def _activate(x, kind, slope):
    if kind == "leaky_relu":
        return T.leaky_relu(x, slope)
    if kind == "relu":
        return T.relu(x)
    if kind == "tanh":
        return T.tanh(x)
    return x


class Mlp:
    """Stack of Linear layers; hidden activation after every layer but the last."""

    def __init__(self, layers, spec):
        self.layers = list(layers)
        self.spec = spec

    @classmethod
    def build(cls, spec, rng, name="mlp"):
        layers = [
            Linear(spec.widths[i], spec.widths[i + 1], rng, spec.init_std, spec.bias[i], f"{name}.{i}")
            for i in range(spec.depth)
        ]
        return cls(layers, spec)

    @property
    def in_dim(self):
        return self.layers[0].n_in

    @property
    def out_dim(self):
        return self.layers[-1].n_out

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def __call__(self, x):
        if not isinstance(x, Tensor):
            x = Tensor(x)
        if x.data.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"expected a batch of width {self.in_dim}, got shape {x.shape}")
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i < last:
                h = _activate(h, self.spec.activation, self.spec.slope)
        return _activate(h, self.spec.output_activation, self.spec.slope)


class DecomposedNet:
    """Extractor ``f`` plus head ``A`` (out x d), optional bias, and output tag."""

    def __init__(self, extractor, head, bias, output):
        if output not in ("sigmoid", "softmax"):
            raise ValueError(f"unknown output nonlinearity {output!r}")
        if output == "sigmoid" and bias is not None:
            raise ValueError("the discriminator head carries no bias")
        if bias is not None and bias.shape != (head.shape[0],):
            raise ValueError("head bias length must equal the number of outputs")
        self.extractor = extractor
        self.head = head
        self.bias = bias
        self.output = output

    @property
    def feature_dim(self):
        return self.head.shape[1]

    @property
    def n_outputs(self):
        return self.head.shape[0]

    def head_parameters(self):
        return [self.head] if self.bias is None else [self.head, self.bias]

    def parameters(self):
        return self.extractor.parameters() + self.head_parameters()

    def features(self, x):
        return self.extractor(x)

    def affine(self, feats):
        y = feats @ self.head.T
        return y if self.bias is None else y + self.bias


def make_head(d, n_out, rng, with_bias, std=INIT_STD, name="head"):
    A = Tensor(rng.normal(0.0, std, size=(n_out, d)), requires_grad=True, name=f"{name}.A")
    b = Tensor(np.zeros(n_out), requires_grad=True, name=f"{name}.b") if with_bias else None
    return A, b


def forward_discriminator(net, x):
    """Returns ``(f(x), A f(x), sigmoid(A f(x)))``."""
    if net.output != "sigmoid":
        raise ValueError("not a discriminator")
    feats = net.features(x)
    logits = net.affine(feats)
    return feats, logits, T.sigmoid(logits)


def forward_classifier(net, x):
    """Returns ``(f(x), A f(x) + b, softmax(A f(x) + b))``."""
    if net.output != "softmax":
        raise ValueError("not a classifier")
    feats = net.features(x)
    y = net.affine(feats)
    return feats, y, T.softmax(y)


@dataclass(frozen=True)
class SharingConfig:
    """Trunk depth ``depth`` and number of top layers NOT shared."""

    depth: int
    shares_removed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("trunk depth must be >= 1")
        if not 0 <= self.shares_removed <= self.depth:
            raise ValueError(f"shares_removed={self.shares_removed} outside [0, {self.depth}]")

    @property
    def n_shared(self):
        return self.depth - self.shares_removed


@dataclass
class GeneratorBank:
    generators: list[Mlp]
    latent_dim: int
    out_dim: int = field(init=False)

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a generator bank needs at least one generator")
        dims = {(g.in_dim, g.out_dim) for g in self.generators}
        if len(dims) != 1:
            raise ValueError("generators must share input/output dimensions")
        if self.generators[0].in_dim != self.latent_dim:
            raise ValueError("generator input width differs from the latent dimension")
        self.out_dim = self.generators[0].out_dim

    @property
    def K(self):
        return len(self.generators)

    def parameters(self):
        return [p for g in self.generators for p in g.parameters()]


def sample_generator_mixture(bank, batch, rng, z=None):
    """Stratified draw: exactly ``batch // K`` samples from each generator.

    Returns ``(samples, labels, z)``; pass ``z`` back in to regenerate the
    same batch through updated generators.
    """
    K = bank.K
    if batch % K != 0:
        raise ValueError(f"batch {batch} is not divisible by K={K}")
    per = batch // K
    if z is None:
        z = rng.normal(0.0, 1.0, size=(batch, bank.latent_dim))
    outs = [g(Tensor(z[i * per:(i + 1) * per])) for i, g in enumerate(bank.generators)]
    samples = outs[0] if K == 1 else T.concat(outs)
    labels = np.repeat(np.arange(K), per)
    return samples, labels, z


def build_mgan(generator_spec, extractor_spec, K, sharing, rng, n_classes=None):
    """Build ``(GeneratorBank, discriminator, classifier)``.

    Layers ``0 .. n_shared-1`` of the two extractors are the same objects.
    The classifier predicts the generator index, so it has ``K`` outputs
    unless ``n_classes`` says otherwise.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if sharing.depth != extractor_spec.depth:
        raise ValueError(f"sharing depth {sharing.depth} != extractor depth {extractor_spec.depth}")
    if generator_spec.widths[-1] != extractor_spec.widths[0]:
        raise ValueError("generator output width must equal the extractor input width")
    rng = rng if isinstance(rng, SeededRng) else SeededRng(int(rng))

    gens = [Mlp.build(generator_spec, rng, f"G{k}") for k in range(K)]
    bank = GeneratorBank(gens, generator_spec.widths[0])

    d_ext = Mlp.build(extractor_spec, rng, "D.f")
    d = extractor_spec.widths[-1]
    A_d, _ = make_head(d, 1, rng, False, extractor_spec.init_std, "D.head")
    disc = DecomposedNet(d_ext, A_d, None, "sigmoid")

    c_layers = list(d_ext.layers[:sharing.n_shared])
    for i in range(sharing.n_shared, extractor_spec.depth):
        c_layers.append(Linear(extractor_spec.widths[i], extractor_spec.widths[i + 1], rng,
                               extractor_spec.init_std, extractor_spec.bias[i], f"C.f.{i}"))
    c_ext = Mlp(c_layers, extractor_spec)
    A_c, b_c = make_head(d, n_classes or K, rng, True, extractor_spec.init_std, "C.head")
    clf = DecomposedNet(c_ext, A_c, b_c, "softmax")
    return bank, disc, clf


def build_classifier(extractor_spec, n_classes, rng):
    rng = rng if isinstance(rng, SeededRng) else SeededRng(int(rng))
    ext = Mlp.build(extractor_spec, rng, "C.f")
    A, b = make_head(extractor_spec.widths[-1], n_classes, rng, True, extractor_spec.init_std, "C.head")
    return DecomposedNet(ext, A, b, "softmax")


def build_discriminator(extractor_spec, rng):
    rng = rng if isinstance(rng, SeededRng) else SeededRng(int(rng))
    ext = Mlp.build(extractor_spec, rng, "D.f")
    A, _ = make_head(extractor_spec.widths[-1], 1, rng, False, extractor_spec.init_std, "D.head")
    return DecomposedNet(ext, A, None, "sigmoid")


def shared_parameters(net_a, net_b):
    """Parameters that are the same object in both extractors."""
    ids = {id(p) for p in net_b.extractor.parameters()}
    return [p for p in net_a.extractor.parameters() if id(p) in ids]


def n_shared_layers(net_a, net_b):
    n = 0
    for la, lb in zip(net_a.extractor.layers, net_b.extractor.layers):
        if la is not lb:
            break
        n += 1
    return n
