"""Command-line interface: synth / train / detect / eval.

Exit codes: 0 success, 2 usage or input error, 3 training divergence.
Every artifact embeds (config hash, seed, checkpoint id) in its sidecar;
with ``--threads 1`` two identical runs produce byte-identical files.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from . import config as cfgmod
from . import rasters, seeding
from .checkpoint import load_checkpoint, resolve
from .data import BitemporalScene, load_scene, normalize, split, tile
from .errors import CheckpointMismatch, Divergence, PipelineError
from .metrics import evaluate, format_table
from .networks import build_discriminator, build_generator
from .scoring import detect_scene
from .synthbench import change_fraction, generate, scenario_by_name, standard_suite
from .training import train


def _add_common(sub):
    sub.add_argument("--config", help="TOML configuration file")
    sub.add_argument("--seed", type=int, default=None, help="override the run seed")
    sub.add_argument("--threads", type=int, default=None, help="cap torch CPU threads")
    sub.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdgan",
        description="Self-supervised GAN change detection for bitemporal rasters",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_synth = subs.add_parser("synth", help="generate a benchmark scene")
    p_synth.add_argument("--scenario", required=True, help="scenario name or 'list'")
    p_synth.add_argument("--suite-seed", type=int, default=2024)
    _add_common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_train = subs.add_parser("train", help="self-supervised training from t1 only")
    p_train.add_argument("--x1", required=True, help="t1 raster path")
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", type=int, default=None)
    p_train.add_argument("--patch-size", type=int, default=None)
    p_train.add_argument("--log-every", type=int, default=0)
    _add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_detect = subs.add_parser("detect", help="detect changes between two rasters")
    p_detect.add_argument("--x1", required=True, help="t1 raster path")
    p_detect.add_argument("--x2", required=True, help="t2 raster path")
    p_detect.add_argument("--checkpoint", required=True, help="checkpoint or run dir")
    p_detect.add_argument("--patch-size", type=int, default=None)
    p_detect.add_argument(
        "--mode", choices=("literal", "aligned"), default=None, help="fusion mode"
    )
    p_detect.add_argument(
        "--threshold", choices=("otsu", "local"), default=None, help="threshold mode"
    )
    p_detect.add_argument(
        "--dump-intermediates",
        action="store_true",
        help="write every intermediate score raster and a panel montage",
    )
    _add_common(p_detect)
    p_detect.set_defaults(func=cmd_detect)

    p_eval = subs.add_parser("eval", help="score a change map against a reference")
    p_eval.add_argument("--pred", required=True, help="predicted change map raster")
    p_eval.add_argument("--ref", required=True, help="reference mask raster")
    p_eval.add_argument("--name", default="run", help="row label for the table")
    _add_common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def _load_tree(args, overrides=None):
    tree = cfgmod.load_config(getattr(args, "config", None), overrides)
    if getattr(args, "seed", None) is not None:
        tree["train"]["seed"] = args.seed
        tree["noise"]["seed"] = args.seed
    return tree


def cmd_synth(args) -> int:
    if args.scenario == "list":
        for scenario in standard_suite(args.suite_seed):
            lo, hi = scenario.expected_fraction
            print(f"{scenario.name}: expected change fraction in [{lo}, {hi}]")
        return 0
    try:
        scenario = scenario_by_name(args.scenario, args.suite_seed)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    scene = generate(scenario.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {"scenario": scenario.name, "seed": scenario.spec.seed}
    rasters.write_raster(out / "x1.bsq", scene.x1, provenance=provenance)
    rasters.write_raster(out / "x2.bsq", scene.x2, provenance=provenance)
    rasters.write_mask(out / "mask.bsq", scene.reference_mask, provenance=provenance)
    rasters.write_png(out / "x1.png", scene.x1[:, :, 0])
    rasters.write_png(out / "x2.png", scene.x2[:, :, 0])
    rasters.write_png(out / "mask.png", scene.reference_mask * 255)
    print(
        f"wrote {scenario.name} to {out} "
        f"(change fraction {change_fraction(scene):.4f})"
    )
    return 0


def cmd_train(args) -> int:
    overrides = {"train": {}, "data": {}}
    if args.epochs is not None:
        overrides["train"]["epochs"] = args.epochs
    if args.batch_size is not None:
        overrides["train"]["batch_size"] = args.batch_size
    if args.patch_size is not None:
        overrides["data"]["patch_size"] = args.patch_size
    tree = _load_tree(args, overrides)
    chash = cfgmod.config_hash(tree)

    x1 = rasters.read_raster(args.x1).astype(np.float32)
    # t2 never participates in training; x1 stands in to satisfy the
    # scene's matching-shape invariant.
    scene = normalize(BitemporalScene(x1=x1, x2=x1))
    patches = tile(scene, tree["data"]["patch_size"])
    split_spec = split(patches, tree["data"]["train_fraction"], tree["train"]["seed"])

    cfg = cfgmod.train_config(tree)
    noise = cfgmod.noise_spec(tree)
    generator = build_generator(
        cfgmod.generator_spec(tree, scene.bands),
        seed=seeding.torch_seed_for(cfg.seed, seeding.INIT_G),
    )
    discriminator = build_discriminator(
        cfgmod.discriminator_spec(tree, scene.bands),
        seed=seeding.torch_seed_for(cfg.seed, seeding.INIT_D),
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps({"config_hash": chash, "config": tree}, sort_keys=True, indent=2)
        + "\n"
    )
    result = train(
        patches,
        split_spec,
        noise,
        generator,
        discriminator,
        cfg,
        checkpoint_dir=out / "checkpoints",
        band_stats=scene.band_stats,
        config_hash=chash,
        log_every=args.log_every,
    )
    result.log.write_csv(out / "train_log.csv")
    last = result.log.holdout_l1[-1][1] if result.log.holdout_l1 else float("nan")
    print(
        f"trained {cfg.epochs} epochs on {len(split_spec.train_ids)} patches; "
        f"best epoch {result.best_epoch}; holdout L1 {last:.5f}; "
        f"checkpoints in {result.checkpoint_dir}"
    )
    return 0


def cmd_detect(args) -> int:
    overrides = {"detect": {}, "threshold": {}, "data": {}}
    if args.mode is not None:
        overrides["detect"]["fuse_mode"] = args.mode
    if args.threshold is not None:
        overrides["threshold"]["mode"] = args.threshold
    if args.patch_size is not None:
        overrides["data"]["patch_size"] = args.patch_size
    tree = _load_tree(args, overrides)
    chash = cfgmod.config_hash(tree)

    bundle = load_checkpoint(resolve(args.checkpoint))
    scene = load_scene(args.x1, args.x2)
    if scene.bands != bundle.generator.spec.bands:
        raise CheckpointMismatch(
            f"checkpoint expects {bundle.generator.spec.bands} bands, "
            f"scene has {scene.bands}"
        )
    normalized = normalize(scene, stats=bundle.band_stats)

    seed = args.seed if args.seed is not None else int(bundle.manifest.get("seed", 0))
    policy = cfgmod.threshold_policy(tree)
    fmode = cfgmod.fuse_mode(tree)
    provenance = {
        "config_hash": chash,
        "seed": seed,
        "checkpoint_id": bundle.checkpoint_id,
        "fuse_mode": fmode.value,
        "threshold_mode": policy.mode.value,
    }
    result = detect_scene(
        normalized,
        bundle.generator,
        bundle.discriminator,
        policy,
        cfgmod.generator_noise(tree),
        patch_size=tree["data"]["patch_size"],
        seed=seed,
        fuse_mode=fmode,
        provenance=provenance,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    change = result.change_map
    rasters.write_mask(out / "change_map.bsq", change.values, provenance=provenance)
    rasters.write_png(out / "change_map.png", change.values * 255)
    if args.dump_intermediates:
        panels = [
            ("x1", normalized.x1[:, :, 0]),
            ("x2", normalized.x2[:, :, 0]),
            ("e_r", result.e_r.values),
            ("s_dif", result.s_dif.values),
            ("fused", result.fused.values),
            ("change_map", change.values.astype(np.float32)),
        ]
        for name, values in panels[2:-1] + [
            ("s_real", result.s_real.values),
            ("s_gen", result.s_gen.values),
        ]:
            rasters.write_raster(out / f"{name}.bsq", values, provenance=provenance)
            rasters.write_png(out / f"{name}.png", values)
        rasters.write_png(out / "panels.png", _montage([v for _, v in panels]))
    print(f"change fraction {change.change_fraction:.4f}; outputs in {out}")
    return 0


def _montage(arrays, gap=4):
    """Side-by-side grayscale strip of same-height 2-d arrays."""
    stretched = []
    for arr in arrays:
        arr = np.asarray(arr, dtype=np.float64)
        lo, hi = float(arr.min()), float(arr.max())
        stretched.append((arr - lo) / (hi - lo) if hi > lo else np.zeros_like(arr))
    height = max(a.shape[0] for a in stretched)
    sep = np.ones((height, gap))
    padded = []
    for arr in stretched:
        if arr.shape[0] < height:
            arr = np.pad(arr, ((0, height - arr.shape[0]), (0, 0)))
        padded.extend([arr, sep])
    return np.hstack(padded[:-1])


def cmd_eval(args) -> int:
    predicted = rasters.read_mask(args.pred)
    reference = rasters.read_mask(args.ref)
    report = evaluate(predicted, reference)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(report.to_json() + "\n")
    print(format_table({args.name: report}))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        torch.set_num_threads(max(1, args.threads))
    try:
        return args.func(args)
    except Divergence as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
