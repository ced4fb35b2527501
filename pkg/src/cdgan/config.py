"""Run configuration: defaults, TOML overrides, CLI overrides, hashing.

Precedence (lowest to highest): built-in defaults, `--config` TOML file,
explicit command-line flags. The effective merged tree is hashed into
every artifact's provenance so outputs can be traced to the exact
configuration that produced them.
"""

import hashlib
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .networks import DiscriminatorSpec, GeneratorNoise, GeneratorSpec, NoiseMode
from .pairs import NoiseSpec
from .scoring import FuseMode, ThresholdMode, ThresholdPolicy
from .training import TrainConfig


def defaults() -> dict:
    return {
        "data": {
            "patch_size": 128,
            "train_fraction": 0.5,
        },
        "noise": {
            "sigma": 0.02,
            "seed": 0,
        },
        "network": {
            "base_channels": 64,
            "hidden_channels": 64,
            "noise_mode": "dropout",
            "dropout_rate": 0.5,
        },
        "train": {
            "epochs": 50,
            "batch_size": 8,
            "momentum": 0.5,
            "learning_rate_g": 0.01,
            "learning_rate_d": 0.01,
            "lambda_l1": 100.0,
            "seed": 0,
        },
        "detect": {
            "fuse_mode": "aligned",
        },
        "threshold": {
            "mode": "local",
            "window": 128,
            "stride": 64,
            "min_contrast": 0.01,
        },
    }


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Merged effective configuration tree."""
    tree = defaults()
    if path is not None:
        with open(path, "rb") as fh:
            tree = _merge(tree, tomllib.load(fh))
    if overrides:
        tree = _merge(tree, overrides)
    return tree


def config_hash(tree: dict) -> str:
    """Stable short hash of a configuration tree."""
    canonical = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def noise_spec(tree: dict) -> NoiseSpec:
    return NoiseSpec(sigma=float(tree["noise"]["sigma"]), seed=int(tree["noise"]["seed"]))


def generator_noise(tree: dict) -> GeneratorNoise:
    net = tree["network"]
    return GeneratorNoise(
        mode=NoiseMode(net["noise_mode"]),
        dropout_rate=float(net["dropout_rate"]),
    )


def generator_spec(tree: dict, bands: int) -> GeneratorSpec:
    return GeneratorSpec(
        bands=bands,
        base_channels=int(tree["network"]["base_channels"]),
        noise=generator_noise(tree),
    )


def discriminator_spec(tree: dict, bands: int) -> DiscriminatorSpec:
    return DiscriminatorSpec(
        bands=bands,
        hidden_channels=int(tree["network"]["hidden_channels"]),
    )


def train_config(tree: dict) -> TrainConfig:
    t = tree["train"]
    return TrainConfig(
        epochs=int(t["epochs"]),
        batch_size=int(t["batch_size"]),
        momentum=float(t["momentum"]),
        learning_rate_g=float(t["learning_rate_g"]),
        learning_rate_d=float(t["learning_rate_d"]),
        lambda_l1=float(t["lambda_l1"]),
        seed=int(t["seed"]),
    )


def threshold_policy(tree: dict) -> ThresholdPolicy:
    t = tree["threshold"]
    return ThresholdPolicy(
        mode=ThresholdMode(t["mode"]),
        window=int(t["window"]),
        stride=None if t.get("stride") is None else int(t["stride"]),
        min_contrast=float(t["min_contrast"]),
    )


def fuse_mode(tree: dict) -> FuseMode:
    return FuseMode(tree["detect"]["fuse_mode"])
