"""Time the compiled kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Also times one full M-GAN training step under each backend, since that is
what the kernels exist to speed up.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gandisc.numerics import _kernels_py

try:
    from gandisc.numerics import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def kernel_cases(n):
    rng = np.random.default_rng(0)
    p, g = rng.normal(size=n), rng.normal(size=n)
    m, v, buf = np.zeros(n), np.zeros(n), np.zeros(n)
    z = rng.normal(size=(n // 16, 16))
    return {
        "adam_update": lambda k: k.adam_update(p, g, m, v, 2e-4, 0.5, 0.999, 1e-8, 0.5, 0.001),
        "momentum_update": lambda k: k.momentum_update(p, g, buf, 1e-3, 0.9),
        "leaky_relu": lambda k: k.leaky_relu(g, 0.2),
        "leaky_relu_grad": lambda k: k.leaky_relu_grad(p, g, 0.2),
        "softmax_rows": lambda k: k.softmax_rows(z),
    }


STEP_SNIPPET = """
import time
from gandisc import presets
from gandisc.data import build_dataset
from gandisc.models import SharingConfig, build_mgan
from gandisc.numerics import BACKEND, SeededRng
from gandisc.training import Trainer
x, _, _ = build_dataset(presets.four_cluster_source())
bank, disc, clf = build_mgan(presets.generator_spec(), presets.extractor_spec(), 4,
                             SharingConfig(3, 1), SeededRng(0))
tr = Trainer(bank, disc, clf, x, presets.sweep_train_config())
tr.run(5)
t = time.perf_counter()
tr.run(50)
print(BACKEND, (time.perf_counter() - t) / 50 * 1e3)
"""


def train_step_ms(pure):
    env = dict(os.environ, GANDISC_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", STEP_SNIPPET], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=16384)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if _kernels_c is None:
        print("compiled extension not built; only the numpy path is available")
    print(f"{'kernel':18s} {'numpy us':>10s} {'cython us':>10s} {'speedup':>8s}")
    for name, fn in kernel_cases(args.size).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=args.repeat, repeat=3)) / args.repeat
        if _kernels_c is None:
            print(f"{name:18s} {t_py * 1e6:10.1f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels_c), number=args.repeat, repeat=3)) / args.repeat
        print(f"{name:18s} {t_py * 1e6:10.1f} {t_c * 1e6:10.1f} {t_py / t_c:8.2f}")
    for pure in (True, False):
        backend, ms = train_step_ms(pure)
        print(f"M-GAN step ({backend}): {ms:.2f} ms")


if __name__ == "__main__":
    main()
