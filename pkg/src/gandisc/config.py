"""Run configuration, manifests and output locations."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import presets
from .data import SyntheticDataset
from .training import TrainConfig
from .transfer import ProbeConfig

OUTPUT_ROOT_ENV = "GANDISC_OUTPUT_ROOT"


@dataclass
class ModelConfig:
    hidden: int = presets.HIDDEN
    feature_dim: int = presets.FEATURE_DIM
    latent_dim: int = presets.LATENT_DIM
    init_std: float = presets.DESK_INIT_STD
    trunk_depth: int = 3
    shares_removed: int = 0
    K: int = 4
    generator_output: str = "linear"


@dataclass
class SimulateConfig:
    p_r: list[float] = field(default_factory=lambda: [0.5, 0.5])
    p_g: list[float] = field(default_factory=lambda: [0.9, 0.1])
    steps: int = 10


@dataclass
class SweepConfig:
    shares_removed: list[int] = field(default_factory=lambda: [0, 1, 2, 3])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    workers: int = 1


@dataclass
class RunConfig:
    command: str = ""
    out_dir: str = "runs/default"
    dataset: SyntheticDataset = field(default_factory=presets.four_cluster_source)
    target: SyntheticDataset = field(default_factory=presets.four_cluster_target)
    idx_images: str | None = None
    idx_labels: str | None = None
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=presets.sweep_train_config)
    probe: ProbeConfig = field(default_factory=presets.sweep_probe_config)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    checkpoint: str | None = None
    geometry_every: int = 0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        if "config" in d and "artifacts" in d:
            d = d["config"]
        nested = {
            "dataset": SyntheticDataset,
            "target": SyntheticDataset,
            "model": ModelConfig,
            "train": TrainConfig,
            "probe": ProbeConfig,
            "simulate": SimulateConfig,
            "sweep": SweepConfig,
        }
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            kw[k] = nested[k](**v) if k in nested and isinstance(v, dict) else v
        return cls(**kw)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        return cls.loads(Path(path).read_text())

    def save(self, path):
        Path(path).write_text(self.dumps() + "\n")


def output_dir(cfg):
    p = Path(cfg.out_dir)
    if not p.is_absolute():
        p = Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / p
    p.mkdir(parents=True, exist_ok=True)
    return p


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out, cfg, artifacts):
    """``manifest.json`` holds the resolved config and the artifact hashes."""
    from .numerics import BACKEND
    from . import __version__

    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.train.seed,
        "version": __version__,
        "kernel_backend": BACKEND,
        "artifacts": {Path(a).name: sha256_file(a) for a in artifacts},
    }
    path = Path(out) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
