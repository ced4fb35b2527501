"""Synthesis of self-supervised unchanged training pairs.

An unchanged partner for a t1 patch is the patch itself plus zero-mean
Gaussian pixel noise, clamped back into the normalized value range. No
function here ever touches real t2 data; training stays label-free.
"""

from dataclasses import dataclass

import numpy as np

from . import seeding
from .data import PartnerKind, PatchPair, SplitSpec


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian pixel noise. ``sigma`` is in normalized units."""

    sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def synthesize_unchanged(x1_patch, spec: NoiseSpec, *, patch_index: int = 0, epoch: int = 0):
    """Return x1 + w with w ~ N(0, sigma^2) i.i.d. per pixel and band.

    The noise field is keyed by (spec.seed, patch_index, epoch), so the
    same patch gets a fresh realization every epoch while any processing
    order reproduces bit-identical results. Output is clamped to [-1, 1].
    """
    x1_patch = np.asarray(x1_patch)
    if spec.sigma == 0.0:
        return x1_patch.astype(np.float32, copy=True)
    rng = seeding.rng_for(spec.seed, seeding.NOISE, patch_index, epoch)
    w = rng.normal(0.0, spec.sigma, size=x1_patch.shape)
    return np.clip(x1_patch + w, -1.0, 1.0).astype(np.float32)


def build_training_set(patches, split: SplitSpec, spec: NoiseSpec, *, epoch: int = 0):
    """One synthetic unchanged pair per train id.

    Only the t1 side of the input pairs is read; the real partners are
    never consulted.
    """
    by_index = {p.index: p for p in patches}
    out = []
    for i in sorted(split.train_ids):
        src = by_index[i]
        out.append(
            PatchPair(
                index=i,
                origin=src.origin,
                x1_patch=src.x1_patch,
                partner=synthesize_unchanged(src.x1_patch, spec, patch_index=i, epoch=epoch),
                partner_kind=PartnerKind.SYNTHETIC_UNCHANGED,
            )
        )
    return out
