"""Command line entry point: ``sgcn <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

log = logging.getLogger("sgcn")


def _cmd_train(args) -> int:
    from .data import load_dataset
    from .train import TrainConfig, fit

    base = TrainConfig.from_file(args.config)
    for rep in range(args.repeats):
        cfg = base.replace(seed=base.seed + rep)
        dataset = load_dataset(cfg)
        report, model = fit(cfg, dataset)
        model.meta["config"] = cfg.to_text()
        suffix = f".{rep}" if args.repeats > 1 else ""
        if cfg.metrics_csv:
            path = Path(cfg.metrics_csv)
            path.parent.mkdir(parents=True, exist_ok=True)
            report.write_csv(path.with_name(path.stem + suffix + path.suffix))
        else:
            sys.stdout.write(report.to_csv())
        if cfg.checkpoint:
            path = Path(cfg.checkpoint)
            path.parent.mkdir(parents=True, exist_ok=True)
            model.save(path.with_name(path.stem + suffix + path.suffix))
        print(
            f"seed {cfg.seed}: best epoch {report.best_epoch}, valid {cfg.metric} "
            f"{report.best_valid:.4f}, test {cfg.metric} {report.test:.4f}",
            file=sys.stderr,
        )
    return 0


def _cmd_eval(args) -> int:
    from .data import load_dataset
    from .layers import load_checkpoint
    from .train import TrainConfig, evaluate

    model = load_checkpoint(args.checkpoint)
    if "config" not in model.meta:
        print("checkpoint carries no training config", file=sys.stderr)
        return 2
    cfg = TrainConfig.from_text(model.meta["config"]).replace(data_dir=args.data)
    if args.tta is not None:
        cfg = cfg.replace(test_time_samples=args.tta)
    dataset = load_dataset(cfg)
    stats = None
    if "target_mean" in model.meta:
        stats = (model.meta["target_mean"], model.meta["target_std"])
    value = evaluate(model, dataset, args.split, cfg, stats, seed_offset=1)
    print(f"{args.split} {cfg.metric} {value:.6f}")
    return 0


def _cmd_verify(args) -> int:
    from .cnn_equiv import conv2d_oracle, sgcn_emulate_conv

    rng = np.random.default_rng(args.seed)
    worst, start = 0.0, time.perf_counter()
    for trial in range(args.trials):
        k = int(rng.integers(0, args.max_k + 1))
        rows, cols = rng.integers(max(5, 2 * k + 1), args.max_size + 1, size=2)
        H = rng.uniform(-1.0, 1.0, size=(rows, cols))
        F = rng.uniform(-1.0, 1.0, size=(2 * k + 1, 2 * k + 1))
        worst = max(worst, float(np.max(np.abs(sgcn_emulate_conv(F, H) - conv2d_oracle(F, H)))))
    ok = worst <= args.tol
    print(
        f"{'PASS' if ok else 'FAIL'} trials={args.trials} max_k={args.max_k} "
        f"worst_deviation={worst:.3e} tol={args.tol:.0e} seconds={time.perf_counter() - start:.2f}"
    )
    return 0 if ok else 1


def _cmd_augment_check(args) -> int:
    from .augment import AugmentPolicy, augment_graph, pairwise_distances, translate
    from .data import load_molecules
    from .graph import batch
    from .layers import SgcnModel

    dataset = load_molecules(args.data)
    rng = np.random.default_rng(args.seed)
    graphs = [g for g in dataset.graphs if g.positions is not None]
    if not graphs:
        print("FAIL no molecules with coordinates")
        return 1
    sample = [graphs[i] for i in rng.choice(len(graphs), size=min(args.samples, len(graphs)), replace=False)]
    policy = AugmentPolicy(rotate=True, rotation_dim=3, translate_sigma=1.0)
    worst_iso = 0.0
    for g in sample:
        moved = augment_graph(g, policy, None, rng)
        worst_iso = max(worst_iso, float(np.max(np.abs(
            pairwise_distances(moved.positions) - pairwise_distances(g.positions)))))
    model = SgcnModel.init(rng, 3, sample[0].d, [16, 16], [2, 2], 2)
    shifted = [translate(g, rng.normal(0.0, 5.0, size=3)) for g in sample]
    same = np.array_equal(model.predict(batch(sample)), model.predict(batch(shifted)))
    pools_ok = True
    if dataset.pools is not None:
        pools_ok = all(
            all(np.shape(c) == g.positions.shape for c in pool)
            for g, pool in zip(dataset.graphs, dataset.pools)
            if g.positions is not None
        )
    checks = [
        ("isometry", worst_iso <= 1e-10, f"worst distance change {worst_iso:.2e}"),
        ("translation", same, "model outputs bit-identical under translation" if same else "outputs differ"),
        ("conformers", pools_ok, "pool shapes match topology" if pools_ok else "pool/topology mismatch"),
    ]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in checks) else 1


def _cmd_synth(args) -> int:
    from .synth import make_isomer_corpus

    out = make_isomer_corpus(args.out, args.molecules, args.conformers, args.sigma, args.seed)
    print(f"wrote {args.molecules} molecules to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgcn", description="Spatial graph convolutional networks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--repeats", type=int, default=1, help="runs with seeds seed, seed+1, ...")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tta", type=int, default=None, help="test-time augmentation samples")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("verify-cnn-equiv", help="check convolution emulation on random filters")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-size", type=int, default=28)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("augment-check", help="sanity-check augmentation on a molecule directory")
    p.add_argument("--data", required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_augment_check)

    p = sub.add_parser("make-synthetic", help="write the synthetic cis/trans molecule corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--molecules", type=int, default=400)
    p.add_argument("--conformers", type=int, default=5)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, FloatingPointError) as exc:
        # covers format errors, divergence and bad configs; anything else is a bug
        print(f"sgcn {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
