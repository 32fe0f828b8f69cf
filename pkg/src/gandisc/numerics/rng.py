import numpy as np


class SeededRng:
    """PCG64 stream keyed by an integer seed (plus optional sub-keys).

    PCG64 and SeedSequence are specified bit-for-bit by numpy, so draws
    agree across platforms.
    """

    def __init__(self, seed, *keys):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, *self.keys])))

    def child(self, *keys):
        return SeededRng(self.seed, *self.keys, *keys)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def permutation(self, n):
        return self.gen.permutation(n)

    def dirichlet(self, alpha, size=None):
        return self.gen.dirichlet(alpha, size)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, keys={self.keys})"
