"""Shared fixtures: synthetic benchmark scenes and the trained runs the
end-to-end tests score.

The expensive pieces (30-epoch trainings) are session-scoped and reused
by the training-behavior tests and the end-to-end acceptance tests. All
settings here are the frozen benchmark configuration; changing them
invalidates the frozen expectations in test_acceptance.py.
"""

import time
from pathlib import Path

import numpy as np
import pytest
import torch

from cdgan import cli, rasters, seeding
from cdgan.data import BitemporalScene, normalize, split, tile
from cdgan.networks import (
    DiscriminatorSpec,
    GeneratorSpec,
    build_discriminator,
    build_generator,
)
from cdgan.pairs import NoiseSpec
from cdgan.training import TrainConfig, train

BENCH_PATCH = 32
BENCH_EPOCHS = 30
BENCH_SEED = 0

# Wall-clock seconds of the expensive session fixtures, keyed by a short
# name. The acceptance suite sums these to enforce its runtime budget.
FIXTURE_SECONDS: dict[str, float] = {}


def run_cli(argv):
    rc = cli.main([str(a) for a in argv])
    assert rc == 0, f"cli {argv[0]} exited {rc}"


@pytest.fixture(scope="session")
def bench_scene_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("scene_blobs10")
    run_cli(["synth", "--scenario", "blobs-10pct", "--out", out])
    return out


@pytest.fixture(scope="session")
def null_scene_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("scene_null")
    run_cli(["synth", "--scenario", "null", "--out", out])
    return out


def _train_on_scene(scene_dir: Path, run_dir: Path):
    """Self-supervised training on the scene's t1 raster alone, using the
    frozen benchmark settings. Returns the in-memory TrainResult so tests
    can inspect the log; checkpoints land under run_dir/checkpoints."""
    torch.set_num_threads(2)
    x1 = rasters.read_raster(scene_dir / "x1.bsq").astype(np.float32)
    scene = normalize(BitemporalScene(x1=x1, x2=x1))
    patches = tile(scene, BENCH_PATCH)
    split_spec = split(patches, 0.5, BENCH_SEED)
    cfg = TrainConfig(epochs=BENCH_EPOCHS, batch_size=8, seed=BENCH_SEED)
    noise = NoiseSpec(sigma=0.02, seed=BENCH_SEED)
    generator = build_generator(
        GeneratorSpec(bands=scene.bands),
        seed=seeding.torch_seed_for(cfg.seed, seeding.INIT_G),
    )
    discriminator = build_discriminator(
        DiscriminatorSpec(bands=scene.bands),
        seed=seeding.torch_seed_for(cfg.seed, seeding.INIT_D),
    )
    return train(
        patches,
        split_spec,
        noise,
        generator,
        discriminator,
        cfg,
        checkpoint_dir=run_dir / "checkpoints",
        band_stats=scene.band_stats,
        config_hash="bench",
    )


@pytest.fixture(scope="session")
def bench_training(bench_scene_dir, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("train_blobs10")
    started = time.perf_counter()
    result = _train_on_scene(bench_scene_dir, run_dir)
    FIXTURE_SECONDS["train_blobs10"] = time.perf_counter() - started
    return result, run_dir


@pytest.fixture(scope="session")
def null_training(null_scene_dir, tmp_path_factory):
    run_dir = tmp_path_factory.mktemp("train_null")
    started = time.perf_counter()
    result = _train_on_scene(null_scene_dir, run_dir)
    FIXTURE_SECONDS["train_null"] = time.perf_counter() - started
    return result, run_dir


def detect_into(scene_dir: Path, run_dir: Path, out: Path, timing_key=None):
    started = time.perf_counter()
    run_cli(
        [
            "detect",
            "--x1", scene_dir / "x1.bsq",
            "--x2", scene_dir / "x2.bsq",
            "--checkpoint", run_dir / "checkpoints",
            "--patch-size", BENCH_PATCH,
            "--seed", BENCH_SEED,
            "--threads", 1,
            "--out", out,
        ]
    )
    if timing_key is not None:
        FIXTURE_SECONDS[timing_key] = time.perf_counter() - started
    return out


@pytest.fixture(scope="session")
def bench_detection(bench_scene_dir, bench_training, tmp_path_factory) -> Path:
    _, run_dir = bench_training
    return detect_into(
        bench_scene_dir,
        run_dir,
        tmp_path_factory.mktemp("detect_blobs10"),
        timing_key="detect_blobs10",
    )


@pytest.fixture(scope="session")
def null_detection(null_scene_dir, null_training, tmp_path_factory) -> Path:
    _, run_dir = null_training
    return detect_into(
        null_scene_dir,
        run_dir,
        tmp_path_factory.mktemp("detect_null"),
        timing_key="detect_null",
    )
