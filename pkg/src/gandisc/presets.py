"""Desk-scale task definitions shared by the CLI and the acceptance suite.

Perceptrons stand in for the DCGAN conv stacks. Weights use N(0, 0.2):
the 0.02 of the conv stacks is close to 1/sqrt(fan_in) for their ~2000
fan-in, and 0.2 plays the same role for these narrow layers.
"""

from __future__ import annotations

import numpy as np

from .data import SyntheticDataset, build_dataset, split
from .models import MlpSpec
from .numerics import SeededRng
from .training import TrainConfig
from .transfer import ProbeConfig, SweepTask

DESK_INIT_STD = 0.2
HIDDEN = 128
FEATURE_DIM = 32
LATENT_DIM = 4


def generator_spec(out_dim=2, hidden=HIDDEN, init_std=DESK_INIT_STD, latent_dim=LATENT_DIM):
    return MlpSpec([latent_dim, hidden, hidden, out_dim], activation="relu", init_std=init_std)


def extractor_spec(in_dim=2, hidden=HIDDEN, feature_dim=FEATURE_DIM, init_std=DESK_INIT_STD):
    return MlpSpec([in_dim, hidden, hidden, feature_dim], init_std=init_std)


def two_mode_dataset(seed=0):
    """Two well separated 2-D Gaussians, the Nash/row-constancy task."""
    return SyntheticDataset(kind="labeled-clusters", means=[[-1.0, 0.0], [1.0, 0.0]],
                            std=0.1, count=1000, seed=seed)


def three_class_dataset(seed=0):
    ang = 2.0 * np.pi * np.arange(3) / 3
    means = (2.0 * np.stack([np.cos(ang), np.sin(ang)], axis=1)).tolist()
    return SyntheticDataset(kind="labeled-clusters", means=means, std=0.1, count=200, seed=seed)


def four_cluster_source(seed=100):
    return SyntheticDataset(kind="gaussian-grid", n_components=4, radius=2.0, std=0.5, count=500, seed=seed)


def four_cluster_target(seed=200):
    return SyntheticDataset(kind="gaussian-grid", n_components=4, radius=2.0, std=0.5, count=1000, seed=seed)


def sweep_train_config(seed=0):
    return TrainConfig(steps=2000, real_batch=120, per_generator_batch=30, beta=0.02, seed=seed)


def sweep_probe_config(seed=0):
    return ProbeConfig(steps=10_000, lr=2e-4, momentum=0.9, batch=120, seed=seed)


def four_cluster_sweep_task(train_config=None, probe_config=None, source=None, target=None,
                            hidden=HIDDEN, init_std=DESK_INIT_STD):
    source = source or four_cluster_source()
    target = target or four_cluster_target()
    xs, _, _ = build_dataset(source)
    xt, yt, _ = build_dataset(target)
    xtr, ytr, xva, yva = split(xt, yt, 0.5, SeededRng(target.seed, 3))
    n_classes = len(source.component_means())
    return SweepTask(
        x_source=xs,
        x_train=xtr,
        y_train=ytr,
        x_val=xva,
        y_val=yva,
        n_classes=n_classes,
        generator_spec=generator_spec(hidden=hidden, init_std=init_std),
        extractor_spec=extractor_spec(hidden=hidden, init_std=init_std),
        K=n_classes,
        train_config=train_config or sweep_train_config(),
        probe_config=probe_config or sweep_probe_config(),
    )
