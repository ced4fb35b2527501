"""Checkpoint container: a versioned JSON manifest plus one raw little-endian
float32 blob per parameter. Save -> load round-trips bit-exactly."""

import hashlib
import json
from pathlib import Path

import numpy as np
import torch

from .data import BandStats
from .errors import UnsupportedFormat
from .networks import (
    DiscriminatorNet,
    DiscriminatorSpec,
    GeneratorNet,
    GeneratorSpec,
)

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
PARAMS = "params.json"


def _blob_name(net_name, param_name):
    return f"{net_name}.{param_name}.bin"


def save_checkpoint(
    directory,
    generator: GeneratorNet,
    discriminator: DiscriminatorNet,
    *,
    band_stats: BandStats | None = None,
    config_hash: str = "",
    seed: int = 0,
    extra: dict | None = None,
) -> Path:
    """Write both networks plus run metadata into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {}
    digest = hashlib.sha256()
    for net_name, net in (("generator", generator), ("discriminator", discriminator)):
        entries = {}
        for pname, p in net.named_parameters():
            blob = _blob_name(net_name, pname)
            data = p.detach().cpu().contiguous().to(torch.float32).numpy().astype("<f4")
            raw = data.tobytes()
            (directory / blob).write_bytes(raw)
            digest.update(blob.encode())
            digest.update(raw)
            entries[pname] = {"shape": list(p.shape), "file": blob}
        index[net_name] = entries
    (directory / PARAMS).write_text(json.dumps(index, sort_keys=True, indent=2) + "\n")
    manifest = {
        "format_version": FORMAT_VERSION,
        "checkpoint_id": digest.hexdigest()[:16],
        "generator_spec": generator.spec.to_dict(),
        "discriminator_spec": discriminator.spec.to_dict(),
        "band_stats": band_stats.to_dict() if band_stats is not None else None,
        "config_hash": config_hash,
        "seed": int(seed),
    }
    if extra:
        manifest.update(extra)
    (directory / MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return directory


class CheckpointBundle:
    def __init__(self, generator, discriminator, manifest):
        self.generator = generator
        self.discriminator = discriminator
        self.manifest = manifest

    @property
    def band_stats(self) -> BandStats | None:
        stats = self.manifest.get("band_stats")
        return BandStats.from_dict(stats) if stats else None

    @property
    def checkpoint_id(self) -> str:
        return self.manifest.get("checkpoint_id", "")


def load_checkpoint(directory) -> CheckpointBundle:
    """Rebuild both networks from a checkpoint directory."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST
    params_path = directory / PARAMS
    if not manifest_path.exists() or not params_path.exists():
        raise UnsupportedFormat(f"{directory} is not a checkpoint directory")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise UnsupportedFormat(
            f"checkpoint format {manifest.get('format_version')!r} not supported"
        )
    index = json.loads(params_path.read_text())
    generator = GeneratorNet(GeneratorSpec.from_dict(manifest["generator_spec"]))
    discriminator = DiscriminatorNet(DiscriminatorSpec.from_dict(manifest["discriminator_spec"]))
    for net_name, net in (("generator", generator), ("discriminator", discriminator)):
        entries = index.get(net_name, {})
        params = dict(net.named_parameters())
        if set(entries) != set(params):
            raise UnsupportedFormat(
                f"{directory}: parameter set mismatch for {net_name}"
            )
        with torch.no_grad():
            for pname, meta in entries.items():
                shape = [int(s) for s in meta["shape"]]
                if list(params[pname].shape) != shape:
                    raise UnsupportedFormat(f"{directory}: shape mismatch for {pname}")
                raw = (directory / meta["file"]).read_bytes()
                flat = np.frombuffer(raw, dtype="<f4")
                if flat.size != params[pname].numel():
                    raise UnsupportedFormat(
                        f"{directory}: blob size mismatch for {pname}"
                    )
                params[pname].copy_(torch.from_numpy(flat.reshape(shape).copy()))
    return CheckpointBundle(generator, discriminator, manifest)


def write_pointer(root, name, target: str):
    """Record a named pointer (e.g. 'latest', 'best') to an epoch directory."""
    (Path(root) / name).write_text(target + "\n")


def read_pointer(root, name) -> str | None:
    path = Path(root) / name
    if not path.exists():
        return None
    return path.read_text().strip()


def resolve(path) -> Path:
    """Accept a checkpoint directory, a directory of epoch checkpoints with
    a 'latest'/'best' pointer ('best' wins when both exist), or a training
    run directory containing such a 'checkpoints' subdirectory."""
    path = Path(path)
    if (path / MANIFEST).exists():
        return path
    for root in (path, path / "checkpoints"):
        for name in ("best", "latest"):
            target = read_pointer(root, name)
            if target and (root / target / MANIFEST).exists():
                return root / target
    raise UnsupportedFormat(f"no checkpoint found under {path}")
