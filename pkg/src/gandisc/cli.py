"""``gandisc`` command line: simulate, train-gan, train-mgan, analyze, probe, sweep, check."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import geometry, presets, simplex
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, output_dir, write_manifest
from .data import SyntheticDataset, build_dataset, read_idx, split
from .models import MlpSpec, SharingConfig, build_mgan
from .numerics import SeededRng
from .training import Trainer, TrainConfig
from .transfer import ProbeConfig, SweepTask, ablation_sweep, probe_train

log = logging.getLogger("gandisc")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _specs(cfg, in_dim):
    m = cfg.model
    gspec = MlpSpec([m.latent_dim, m.hidden, m.hidden, in_dim], activation="relu",
                    init_std=m.init_std, output_activation=m.generator_output)
    widths = [in_dim] + [m.hidden] * (m.trunk_depth - 1) + [m.feature_dim]
    return gspec, MlpSpec(widths, init_std=m.init_std)


def _source(cfg):
    if cfg.idx_images:
        x = read_idx(cfg.idx_images)
        y = read_idx(cfg.idx_labels) if cfg.idx_labels else np.zeros(len(x), dtype=np.int64)
        return x, y
    x, y, _ = build_dataset(cfg.dataset)
    return x, y


def _write_jsonl(path, records):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def cmd_simulate(cfg):
    out = output_dir(cfg)
    s = cfg.simulate
    traj = simplex.run_dynamics(simplex.DiscreteDensity.normalized(s.p_r),
                                simplex.DiscreteDensity.normalized(s.p_g), s.steps)
    path = out / "trajectory.jsonl"
    path.write_text(traj.to_jsonl())
    for st in traj.steps:
        print(f"step {st.index:3d}  p_g={np.round(st.p_g.probs, 4).tolist()}  "
              f"collapse={st.collapse:.4f}  C(G)={st.value:.6f}")
    return [path]


def _train(cfg, mgan):
    out = output_dir(cfg)
    x, _ = _source(cfg)
    gspec, espec = _specs(cfg, x.shape[1])
    K = cfg.model.K if mgan else 1
    sharing = SharingConfig(cfg.model.trunk_depth, cfg.model.shares_removed)
    bank, disc, clf = build_mgan(gspec, espec, K, sharing, SeededRng(cfg.train.seed, 0))
    tcfg = cfg.train if mgan else TrainConfig(**{**cfg.train.to_dict(), "beta": 0.0})
    trainer = Trainer(bank, disc, clf if mgan else None, x, tcfg)
    metrics = out / "metrics.jsonl"
    n_steps = tcfg.total_steps(len(x))
    with open(metrics, "w") as fh:
        for i in range(n_steps):
            rec = trainer.step()
            fh.write(json.dumps({"type": "metrics", **rec.to_dict()}, sort_keys=True) + "\n")
            last = i == n_steps - 1
            if cfg.geometry_every and ((i + 1) % cfg.geometry_every == 0 or last):
                rep = geometry.geometry_report(disc, x[:1000])
                fh.write(json.dumps({"type": "geometry", "step": i, **rep.to_dict()}, sort_keys=True) + "\n")
            if (i + 1) % max(1, n_steps // 10) == 0:
                log.info("step %d d_loss %.4f g_loss %.4f D(real) %.3f", i, rec.d_loss, rec.g_loss, rec.d_real)
    ckpt = out / "model.ckpt"
    save_checkpoint(ckpt, bank, disc, clf, sharing, gspec, espec,
                    {"g": trainer.opt_g, "d": trainer.opt_d, "c": trainer.opt_c},
                    extra={"steps": n_steps, "mgan": mgan})
    return [metrics, ckpt]


def cmd_train_gan(cfg):
    return _train(cfg, mgan=False)


def cmd_train_mgan(cfg):
    return _train(cfg, mgan=True)


def _load(cfg):
    if not cfg.checkpoint:
        raise SystemExit("--checkpoint is required")
    return load_checkpoint(cfg.checkpoint)


def cmd_analyze(cfg):
    out = output_dir(cfg)
    _, disc, clf, _, header, _ = _load(cfg)
    x, y = _source(cfg)
    rep = geometry.geometry_report(disc, x, clf=clf if header["extra"].get("mgan") else None)
    path = out / "geometry.json"
    path.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    print(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    return [path]


def _target(cfg):
    xt, yt, _ = build_dataset(cfg.target)
    return split(xt, yt, 0.5, SeededRng(cfg.target.seed, 3)), len(cfg.target.component_means())


def cmd_probe(cfg):
    out = output_dir(cfg)
    _, disc, clf, _, _, _ = _load(cfg)
    (xtr, ytr, xva, yva), n_classes = _target(cfg)
    rows = []
    for name, net in (("discriminator", disc), ("classifier", clf)):
        if net is None:
            continue
        r = probe_train(net.extractor, xtr, ytr, xva, yva, n_classes, cfg.probe)
        rows.append({"extractor": name, "final_accuracy": r.final_accuracy, "best_accuracy": r.best_accuracy})
        print(f"{name:14s} final {r.final_accuracy:.4f}  best {r.best_accuracy:.4f}")
    path = out / "probe.jsonl"
    _write_jsonl(path, rows)
    return [path]


def cmd_sweep(cfg):
    out = output_dir(cfg)
    xs, _ = _source(cfg)
    (xtr, ytr, xva, yva), n_classes = _target(cfg)
    gspec, espec = _specs(cfg, xs.shape[1])
    task = SweepTask(xs, xtr, ytr, xva, yva, n_classes, gspec, espec, cfg.model.K, cfg.train, cfg.probe)
    report = ablation_sweep(task, cfg.sweep.shares_removed, cfg.sweep.seeds, cfg.sweep.workers,
                            on_row=lambda r: log.info("s=%d seed=%d D=%.4f C=%.4f", r.shares_removed,
                                                      r.seed, r.disc_accuracy, r.clf_accuracy))
    csv_path = out / "report.csv"
    csv_path.write_text(report.to_csv())
    rec_path = out / "report.jsonl"
    _write_jsonl(rec_path, [{"type": "row", **r} for r in report.to_records()]
                 + [{"type": "aggregate", **a} for a in report.aggregate()])
    print(report.to_csv(), end="")
    for a in report.aggregate():
        print(json.dumps(a, sort_keys=True))
    return [csv_path, rec_path]


def cmd_check(cfg):
    from .check import run_all

    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:14s} {detail}")
    if not all(ok for _, ok, _ in results):
        raise SystemExit(1)
    return []


COMMANDS = {
    "simulate": cmd_simulate,
    "train-gan": cmd_train_gan,
    "train-mgan": cmd_train_mgan,
    "analyze": cmd_analyze,
    "probe": cmd_probe,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def build_parser():
    p = argparse.ArgumentParser(prog="gandisc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="config file or manifest.json from an earlier run")
        sp.add_argument("--out", help="output directory (relative to $GANDISC_OUTPUT_ROOT)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "check":
            continue
        if name == "simulate":
            sp.add_argument("--p-r", type=_floats)
            sp.add_argument("--p-g", type=_floats)
            sp.add_argument("--steps", type=int)
            continue
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dataset", choices=["gaussian-ring", "gaussian-grid", "two-mode", "four-cluster"])
        sp.add_argument("--idx-images")
        sp.add_argument("--idx-labels")
        sp.add_argument("--checkpoint")
        sp.add_argument("--steps", type=int, help="training steps (overrides epochs)")
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--lr", type=float)
        sp.add_argument("--beta", type=float, help="M-GAN classifier weight")
        sp.add_argument("--K", type=int, help="number of generators")
        sp.add_argument("--real-batch", type=int)
        sp.add_argument("--per-generator-batch", type=int)
        sp.add_argument("--generator-loss", choices=["minimax", "non-saturating"])
        sp.add_argument("--shares-removed", type=int)
        sp.add_argument("--trunk-depth", type=int)
        sp.add_argument("--hidden", type=int)
        sp.add_argument("--feature-dim", type=int)
        sp.add_argument("--init-std", type=float)
        sp.add_argument("--geometry-every", type=int)
        sp.add_argument("--probe-steps", type=int)
        sp.add_argument("--probe-epochs", type=int)
        sp.add_argument("--probe-lr", type=float)
        sp.add_argument("--probe-report", choices=["final", "best"])
        sp.add_argument("--sweep-shares", type=_ints)
        sp.add_argument("--sweep-seeds", type=_ints)
        sp.add_argument("--workers", type=int)
    return p


_DATASETS = {
    "two-mode": presets.two_mode_dataset,
    "four-cluster": presets.four_cluster_source,
    "gaussian-ring": lambda: SyntheticDataset(kind="gaussian-ring"),
    "gaussian-grid": lambda: SyntheticDataset(kind="gaussian-grid", n_components=9),
}


def resolve_config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    cfg.command = args.command
    if args.out:
        cfg.out_dir = args.out
    elif not args.config:
        cfg.out_dir = f"runs/{args.command}"
    a = vars(args)

    def take(key, obj, attr=None):
        if a.get(key) is not None:
            setattr(obj, attr or key, a[key])

    if args.command == "simulate":
        take("p_r", cfg.simulate)
        take("p_g", cfg.simulate)
        take("steps", cfg.simulate)
        return cfg
    if args.command == "check":
        return cfg
    if a.get("dataset"):
        cfg.dataset = _DATASETS[a["dataset"]]()
    take("idx_images", cfg)
    take("idx_labels", cfg)
    take("checkpoint", cfg)
    take("geometry_every", cfg)
    train = cfg.train.to_dict()
    for key in ("seed", "steps", "epochs", "lr", "beta", "real_batch", "per_generator_batch", "generator_loss"):
        if a.get(key) is not None:
            train[key] = a[key]
    cfg.train = TrainConfig(**train)
    for key, attr in (("K", "K"), ("shares_removed", "shares_removed"), ("trunk_depth", "trunk_depth"),
                      ("hidden", "hidden"), ("feature_dim", "feature_dim"), ("init_std", "init_std")):
        take(key, cfg.model, attr)
    probe = cfg.probe.to_dict()
    for key, attr in (("probe_steps", "steps"), ("probe_lr", "lr"), ("probe_report", "report")):
        if a.get(key) is not None:
            probe[attr] = a[key]
    if a.get("probe_epochs") is not None:
        probe["epochs"] = a["probe_epochs"]
        probe["steps"] = None
    if a.get("seed") is not None:
        probe["seed"] = a["seed"]
    cfg.probe = ProbeConfig(**probe)
    take("sweep_shares", cfg.sweep, "shares_removed")
    take("sweep_seeds", cfg.sweep, "seeds")
    take("workers", cfg.sweep)
    SharingConfig(cfg.model.trunk_depth, cfg.model.shares_removed)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    cfg = resolve_config(args)
    artifacts = COMMANDS[args.command](cfg)
    if args.command != "check":
        out = output_dir(cfg)
        cfg.save(out / "config.json")
        manifest = write_manifest(out, cfg, artifacts)
        print(f"wrote {manifest}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
