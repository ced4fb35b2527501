"""Bitemporal scenes: loading, normalization, tiling, and splitting."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import rasters
from .errors import BadMask, DegenerateBand, SceneTooSmall, ShapeMismatch


class PartnerKind(Enum):
    REAL_T2 = "real_t2"
    SYNTHETIC_UNCHANGED = "synthetic_unchanged"


@dataclass
class BandStats:
    """Per-band min/max in the original radiometric units."""

    minimum: np.ndarray
    maximum: np.ndarray

    def to_dict(self):
        return {
            "minimum": [float(v) for v in self.minimum],
            "maximum": [float(v) for v in self.maximum],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            minimum=np.asarray(d["minimum"], dtype=np.float64),
            maximum=np.asarray(d["maximum"], dtype=np.float64),
        )


@dataclass
class BitemporalScene:
    """A co-registered raster pair plus optional reference change mask.

    ``x1`` and ``x2`` are (H, W, B) float arrays; the mask, when present,
    is (H, W) with values in {0, 1}. ``band_stats`` is set by
    :func:`normalize` and records the affine map back to radiometric units.
    """

    x1: np.ndarray
    x2: np.ndarray
    reference_mask: np.ndarray | None = None
    band_stats: BandStats | None = None

    def __post_init__(self):
        self.x1 = np.asarray(self.x1)
        self.x2 = np.asarray(self.x2)
        if self.x1.ndim == 2:
            self.x1 = self.x1[:, :, None]
        if self.x2.ndim == 2:
            self.x2 = self.x2[:, :, None]
        if self.x1.ndim != 3 or self.x2.ndim != 3:
            raise ShapeMismatch("scene rasters must be (H, W, B)")
        if self.x1.shape != self.x2.shape:
            raise ShapeMismatch(
                f"x1 has shape {self.x1.shape} but x2 has shape {self.x2.shape}"
            )
        if self.reference_mask is not None:
            self.reference_mask = np.asarray(self.reference_mask)
            if self.reference_mask.shape != self.x1.shape[:2]:
                raise BadMask(
                    f"mask shape {self.reference_mask.shape} does not match "
                    f"scene {self.x1.shape[:2]}"
                )
            values = np.unique(self.reference_mask)
            if not np.isin(values, (0, 1)).all():
                raise BadMask("mask must contain only {0, 1}")

    @property
    def height(self):
        return self.x1.shape[0]

    @property
    def width(self):
        return self.x1.shape[1]

    @property
    def bands(self):
        return self.x1.shape[2]


@dataclass
class PatchPair:
    """One tile pair: the conditioning patch and its partner.

    The partner is either the real t2 tile or a synthetic unchanged tile.
    ``origin`` is the (row, col) pixel offset of the tile in its scene.
    """

    index: int
    origin: tuple[int, int]
    x1_patch: np.ndarray
    partner: np.ndarray
    partner_kind: PartnerKind


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    train_fraction: float
    train_ids: frozenset[int] = field(default_factory=frozenset)
    test_ids: frozenset[int] = field(default_factory=frozenset)


def load_scene(path_x1, path_x2, path_mask=None) -> BitemporalScene:
    """Load a scene from two rasters and an optional mask.

    Any nonzero mask pixel is treated as changed. Shape problems raise
    SHAPE_MISMATCH / BAD_MASK rather than silently reshaping.
    """
    x1 = rasters.read_raster(path_x1).astype(np.float32)
    x2 = rasters.read_raster(path_x2).astype(np.float32)
    mask = rasters.read_mask(path_mask) if path_mask is not None else None
    return BitemporalScene(x1=x1, x2=x2, reference_mask=mask)


def normalize(scene: BitemporalScene, stats: BandStats | None = None) -> BitemporalScene:
    """Map every band of x1 and x2 affinely to [-1, 1].

    The map is derived from x1's per-band min/max unless ``stats`` is
    given (e.g. a checkpoint's stats at detection time). x2 reuses x1's
    map so radiometric shifts between the dates survive as signal.
    """
    if stats is None:
        x1 = scene.x1
        if not np.isfinite(x1).all():
            raise DegenerateBand("x1 contains non-finite values")
        stats = BandStats(
            minimum=x1.min(axis=(0, 1)).astype(np.float64),
            maximum=x1.max(axis=(0, 1)).astype(np.float64),
        )
    if len(stats.minimum) != scene.bands:
        raise DegenerateBand(
            f"stats cover {len(stats.minimum)} bands, scene has {scene.bands}"
        )
    span = stats.maximum - stats.minimum
    for b, s in enumerate(span):
        if not s > 0:
            raise DegenerateBand(f"band {b} is constant (min == max)")
    lo = stats.minimum.astype(np.float32)
    span = span.astype(np.float32)

    def _map(arr):
        return ((arr - lo) / span * 2.0 - 1.0).astype(np.float32)

    return BitemporalScene(
        x1=_map(scene.x1),
        x2=_map(scene.x2),
        reference_mask=scene.reference_mask,
        band_stats=stats,
    )


def denormalize(scene: BitemporalScene) -> BitemporalScene:
    """Invert :func:`normalize` using the scene's recorded band stats."""
    if scene.band_stats is None:
        raise DegenerateBand("scene has no band stats to denormalize with")
    lo = scene.band_stats.minimum.astype(np.float32)
    span = (scene.band_stats.maximum - scene.band_stats.minimum).astype(np.float32)

    def _unmap(arr):
        return ((arr + 1.0) / 2.0 * span + lo).astype(np.float32)

    return BitemporalScene(
        x1=_unmap(scene.x1),
        x2=_unmap(scene.x2),
        reference_mask=scene.reference_mask,
        band_stats=None,
    )


def tile(scene: BitemporalScene, patch_size: int = 128) -> list[PatchPair]:
    """Cut the scene into non-overlapping patch pairs.

    Trailing rows/columns smaller than the patch size are dropped. Patch
    indices run row-major over the tile grid.
    """
    p = int(patch_size)
    if p < 8:
        raise ValueError(f"patch_size must be >= 8, got {p}")
    h, w = scene.height, scene.width
    if h < p or w < p:
        raise SceneTooSmall(f"scene {h}x{w} is smaller than one {p}x{p} patch")
    pairs = []
    index = 0
    for r in range(h // p):
        for c in range(w // p):
            r0, c0 = r * p, c * p
            pairs.append(
                PatchPair(
                    index=index,
                    origin=(r0, c0),
                    x1_patch=scene.x1[r0 : r0 + p, c0 : c0 + p],
                    partner=scene.x2[r0 : r0 + p, c0 : c0 + p],
                    partner_kind=PartnerKind.REAL_T2,
                )
            )
            index += 1
    return pairs


def stitch(tiles, out_shape):
    """Place 2-d (or 3-d) tiles back at their origins.

    ``tiles`` is an iterable of (origin, array). Inverse of :func:`tile`
    over the cropped extent.
    """
    tiles = list(tiles)
    if not tiles:
        raise ValueError("nothing to stitch")
    sample = np.asarray(tiles[0][1])
    shape = tuple(out_shape) + sample.shape[2:]
    out = np.zeros(shape, dtype=sample.dtype)
    for (r0, c0), arr in tiles:
        arr = np.asarray(arr)
        out[r0 : r0 + arr.shape[0], c0 : c0 + arr.shape[1]] = arr
    return out


def split(patches, train_fraction: float, seed: int) -> SplitSpec:
    """Randomly partition patch ids into train/test, deterministic per seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    ids = np.array(sorted(p.index for p in patches), dtype=np.int64)
    n_train = round(train_fraction * len(ids))
    perm = np.random.default_rng(seed).permutation(ids)
    return SplitSpec(
        seed=seed,
        train_fraction=train_fraction,
        train_ids=frozenset(int(i) for i in perm[:n_train]),
        test_ids=frozenset(int(i) for i in perm[n_train:]),
    )
