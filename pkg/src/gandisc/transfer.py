"""Linear probes on frozen extractors and the shares-removed sweep."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .models import SharingConfig, build_mgan
from .numerics import SGD, SeededRng, Tensor, backward, no_grad
from .numerics import tensor as T
from .training import TrainConfig, TrainingDiverged, cross_entropy, one_hot, train

TABLE_COLUMNS = [
    "shares removed",
    "discriminator-extractor-based accuracy",
    "classifier-extractor-based accuracy",
    "accuracy difference (classifier - discriminator)",
    "seed",
]


@dataclass
class ProbeConfig:
    epochs: int | None = None
    steps: int | None = 10_000
    lr: float = 2e-4
    momentum: float = 0.9
    batch: int = 120
    init_std: float = 0.02
    seed: int = 0
    report: str = "final"

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("probe lr must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.report not in ("final", "best"):
            raise ValueError("report must be 'final' or 'best'")
        if self.epochs is None and self.steps is None:
            raise ValueError("set probe epochs or steps")

    def n_epochs(self, n_train):
        if self.epochs is not None:
            return int(self.epochs)
        per_epoch = math.ceil(n_train / self.batch)
        return max(1, math.ceil(self.steps / per_epoch))

    def to_dict(self):
        return asdict(self)


@dataclass
class ProbeResult:
    final_accuracy: float
    best_accuracy: float
    curve: list[float]

    def accuracy(self, which="final"):
        return self.best_accuracy if which == "best" else self.final_accuracy


def _check_split(x, y, n_classes, what):
    if len(x) == 0:
        raise ValueError(f"empty {what} split")
    y = np.asarray(y)
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"{what} labels outside [0, {n_classes})")


def extract(extractor, x):
    with no_grad():
        return extractor(Tensor(np.asarray(x, dtype=np.float64))).data


def probe_on_features(f_train, y_train, f_val, y_val, n_classes, config):
    """Train a bias-free softmax head with momentum SGD on fixed features."""
    _check_split(f_train, y_train, n_classes, "train")
    _check_split(f_val, y_val, n_classes, "validation")
    rng = SeededRng(config.seed, 7)
    W = Tensor(rng.normal(0.0, config.init_std, size=(n_classes, f_train.shape[1])), requires_grad=True)
    opt = SGD([W], config.lr, config.momentum)
    targets = one_hot(y_train, n_classes)
    y_val = np.asarray(y_val)
    n = len(f_train)
    curve = []
    for _ in range(config.n_epochs(n)):
        order = rng.permutation(n)
        for i in range(0, n, config.batch):
            idx = order[i:i + config.batch]
            q = T.softmax(Tensor(f_train[idx]) @ W.T)
            backward(cross_entropy(targets[idx], q))
            opt.step()
        curve.append(float(((f_val @ W.data.T).argmax(axis=1) == y_val).mean()))
    return ProbeResult(curve[-1], max(curve), curve)


def probe_train(extractor, x_train, y_train, x_val, y_val, n_classes, config):
    """Freeze ``extractor``, fit a fresh head on its features, return a ProbeResult."""
    before = [p.data.copy() for p in extractor.parameters()]
    result = probe_on_features(extract(extractor, x_train), y_train,
                               extract(extractor, x_val), y_val, n_classes, config)
    for p, b in zip(extractor.parameters(), before):
        if not np.array_equal(p.data, b):
            raise RuntimeError(f"frozen parameter {p.name} changed during probing")
    return result


@dataclass
class ProbeRow:
    shares_removed: int
    seed: int
    disc_accuracy: float
    clf_accuracy: float
    disc_best: float = float("nan")
    clf_best: float = float("nan")
    status: str = "ok"

    @property
    def difference(self):
        return self.clf_accuracy - self.disc_accuracy


@dataclass
class ProbeReport:
    rows: list[ProbeRow] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)

    def shares(self):
        return sorted({r.shares_removed for r in self.rows})

    def ok_rows(self, s=None):
        return [r for r in self.rows if r.status == "ok" and (s is None or r.shares_removed == s)]

    def median_difference(self, s):
        rows = self.ok_rows(s)
        return float(np.median([r.difference for r in rows])) if rows else float("nan")

    def aggregate(self):
        out = []
        for s in self.shares():
            rows = self.ok_rows(s)
            if not rows:
                out.append({"shares_removed": s, "n_ok": 0})
                continue
            out.append({
                "shares_removed": s,
                "n_ok": len(rows),
                "disc_median": float(np.median([r.disc_accuracy for r in rows])),
                "clf_median": float(np.median([r.clf_accuracy for r in rows])),
                "difference_median": self.median_difference(s),
            })
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in self.rows:
            if r.status != "ok":
                w.writerow([r.shares_removed, "nan", "nan", "nan", r.seed])
                continue
            w.writerow([r.shares_removed, f"{r.disc_accuracy:.4f}", f"{r.clf_accuracy:.4f}",
                        f"{r.difference:+.4f}", r.seed])
        return buf.getvalue()

    def to_records(self):
        recs = []
        for r in self.rows:
            d = asdict(r)
            d["difference"] = r.difference
            recs.append(d)
        return recs


@dataclass
class SweepTask:
    """Everything one (s, seed) cell needs; picklable for worker processes."""

    x_source: np.ndarray
    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    n_classes: int
    generator_spec: object
    extractor_spec: object
    K: int
    train_config: TrainConfig
    probe_config: ProbeConfig


def cell_seed(base_seed, shares_removed):
    """Fresh deterministic seed for the weight reset of one sweep cell."""
    return int(np.random.SeedSequence([int(base_seed), int(shares_removed)]).generate_state(1)[0])


def run_cell(task, shares_removed, seed):
    s_seed = cell_seed(seed, shares_removed)
    sharing = SharingConfig(task.extractor_spec.depth, shares_removed)
    bank, disc, clf = build_mgan(task.generator_spec, task.extractor_spec, task.K, sharing, SeededRng(s_seed, 0))
    cfg = TrainConfig(**{**task.train_config.to_dict(), "seed": s_seed})
    try:
        train((bank, disc, clf), task.x_source, cfg)
    except TrainingDiverged:
        return ProbeRow(shares_removed, seed, float("nan"), float("nan"), status="diverged")
    pcfg = ProbeConfig(**{**task.probe_config.to_dict(), "seed": s_seed})
    rd = probe_train(disc.extractor, task.x_train, task.y_train, task.x_val, task.y_val, task.n_classes, pcfg)
    rc = probe_train(clf.extractor, task.x_train, task.y_train, task.x_val, task.y_val, task.n_classes, pcfg)
    which = task.probe_config.report
    return ProbeRow(shares_removed, seed, rd.accuracy(which), rc.accuracy(which), rd.best_accuracy, rc.best_accuracy)


def _run_cell_args(args):
    return run_cell(*args)


def ablation_sweep(task, shares_removed, seeds, workers=1, on_row=None):
    """Rebuild, train and probe one M-GAN per (s, seed) cell."""
    for s in shares_removed:
        if not 0 <= s <= task.extractor_spec.depth:
            raise ValueError(f"shares_removed={s} exceeds trunk depth {task.extractor_spec.depth}")
    cells = [(task, s, seed) for s in shares_removed for seed in seeds]
    report = ProbeReport(seeds=list(seeds))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_run_cell_args, cells))
        for row in rows:
            report.rows.append(row)
            if on_row:
                on_row(row)
    else:
        for cell in cells:
            row = run_cell(*cell)
            report.rows.append(row)
            if on_row:
                on_row(row)
    return report
