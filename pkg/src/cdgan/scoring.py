"""From trained networks to a binary change map.

Per patch the chain computes the per-pixel reconstruction error between
the real t2 tile and the generated one, the discriminator's score maps on
the real pair and on the generated pair, and their difference. The
stitched full-scene error and difference maps are fused by elementwise
product and thresholded.

Polarity matters: high reconstruction error means change, while a LOW
score difference means change. The default fusion therefore min-max
normalizes both maps and multiplies the error map with the inverted
difference map, giving a single high-means-change surface. The literal
mode multiplies the two raw maps as written, for comparison.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import seeding
from .data import BitemporalScene, stitch, tile
from .errors import ShapeMismatch
from .networks import (
    DiscriminatorNet,
    GeneratorNet,
    GeneratorNoise,
    discriminator_forward,
    generator_forward,
)

OTSU_BINS = 256


class ScoreKind(Enum):
    E_R = "reconstruction_error"
    S_REAL_PAIR = "score_real_pair"
    S_GEN_PAIR = "score_generated_pair"
    S_DIF = "score_difference"
    FUSED_H = "fused"


class Polarity(Enum):
    HIGH_MEANS_CHANGE = "high_means_change"
    LOW_MEANS_CHANGE = "low_means_change"


class FuseMode(Enum):
    LITERAL = "literal"
    POLARITY_ALIGNED = "aligned"


class ThresholdMode(Enum):
    GLOBAL_OTSU = "otsu"
    LOCAL_ADAPTIVE = "local"


@dataclass
class ScoreRaster:
    """A single-channel per-pixel map with value-range metadata."""

    values: np.ndarray
    kind: ScoreKind
    polarity: Polarity
    degenerate: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ShapeMismatch(f"score raster must be 2-d, got {self.values.shape}")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Decision-boundary policy for turning a fused map into a change map.

    ``min_contrast`` is a fraction of the full map's dynamic range; a
    window whose own range falls below it takes the global threshold
    instead of its local one.
    """

    mode: ThresholdMode = ThresholdMode.LOCAL_ADAPTIVE
    window: int = 128
    stride: int | None = None
    min_contrast: float = 0.01

    def __post_init__(self):
        if self.window < 16:
            raise ValueError(f"window must be >= 16, got {self.window}")
        if self.stride is not None and self.stride > self.window:
            raise ValueError("stride must be <= window")

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else self.window // 2


@dataclass
class ChangeMap:
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint8)
        if not np.isin(np.unique(self.values), (0, 1)).all():
            raise ValueError("change map must be binary")

    @property
    def change_fraction(self) -> float:
        return float(self.values.mean())


@dataclass
class DetectionResult:
    change_map: ChangeMap
    e_r: ScoreRaster
    s_dif: ScoreRaster
    fused: ScoreRaster
    s_real: ScoreRaster
    s_gen: ScoreRaster


def reconstruction_error_map(x2_patch, reconstruction) -> ScoreRaster:
    """Per-pixel band-mean absolute difference; high means change."""
    x2_patch = np.asarray(x2_patch)
    reconstruction = np.asarray(reconstruction)
    if x2_patch.shape != reconstruction.shape:
        raise ShapeMismatch(f"{x2_patch.shape} vs {reconstruction.shape}")
    err = np.abs(x2_patch.astype(np.float64) - reconstruction.astype(np.float64))
    if err.ndim == 3:
        err = err.mean(axis=2)
    return ScoreRaster(err, ScoreKind.E_R, Polarity.HIGH_MEANS_CHANGE)


def score_maps(
    discriminator: DiscriminatorNet, x1_patch, x2_patch, reconstruction
) -> tuple[ScoreRaster, ScoreRaster]:
    """Discriminator likelihoods for the real pair and the generated pair."""
    s_real = discriminator_forward(discriminator, x1_patch, x2_patch)
    s_gen = discriminator_forward(discriminator, x1_patch, reconstruction)
    return (
        ScoreRaster(s_real, ScoreKind.S_REAL_PAIR, Polarity.HIGH_MEANS_CHANGE),
        ScoreRaster(s_gen, ScoreKind.S_GEN_PAIR, Polarity.HIGH_MEANS_CHANGE),
    )


def difference_map(s_real: ScoreRaster, s_gen: ScoreRaster) -> ScoreRaster:
    """Real-pair score minus generated-pair score; LOW values flag change."""
    if s_real.values.shape != s_gen.values.shape:
        raise ShapeMismatch(f"{s_real.values.shape} vs {s_gen.values.shape}")
    if s_real.kind is not ScoreKind.S_REAL_PAIR or s_gen.kind is not ScoreKind.S_GEN_PAIR:
        raise ValueError("difference_map expects (S_REAL_PAIR, S_GEN_PAIR)")
    return ScoreRaster(
        s_real.values.astype(np.float64) - s_gen.values.astype(np.float64),
        ScoreKind.S_DIF,
        Polarity.LOW_MEANS_CHANGE,
    )


def _minmax(values):
    lo = float(values.min())
    hi = float(values.max())
    if hi <= lo:
        return None
    return (values - lo) / (hi - lo)


def fuse(e_r: ScoreRaster, s_dif: ScoreRaster, mode: FuseMode = FuseMode.POLARITY_ALIGNED) -> ScoreRaster:
    """Hadamard fusion of the two evidence channels.

    POLARITY_ALIGNED (default): norm(e_r) * (1 - norm(s_dif)), so change is
    monotone-high. If either map is constant the fusion is degenerate and
    an all-zero map is returned with the warning flag set. LITERAL: the
    raw elementwise product, exactly as written.
    """
    if e_r.values.shape != s_dif.values.shape:
        raise ShapeMismatch(f"{e_r.values.shape} vs {s_dif.values.shape}")
    if mode is FuseMode.LITERAL:
        return ScoreRaster(
            e_r.values.astype(np.float64) * s_dif.values.astype(np.float64),
            ScoreKind.FUSED_H,
            Polarity.HIGH_MEANS_CHANGE,
        )
    err = _minmax(e_r.values.astype(np.float64))
    dif = _minmax(s_dif.values.astype(np.float64))
    if err is None or dif is None:
        return ScoreRaster(
            np.zeros_like(e_r.values, dtype=np.float64),
            ScoreKind.FUSED_H,
            Polarity.HIGH_MEANS_CHANGE,
            degenerate=True,
        )
    return ScoreRaster(err * (1.0 - dif), ScoreKind.FUSED_H, Polarity.HIGH_MEANS_CHANGE)


def otsu_cut(hist) -> int | None:
    """Index t of the histogram cut (bins 0..t vs t+1..) maximizing the
    between-class variance, computed in exact integer arithmetic.

    Ties break to the lowest t. Returns None when every count sits in a
    single bin (no valid cut).
    """
    counts = [int(c) for c in hist]
    total = sum(counts)
    weighted_total = sum(i * c for i, c in enumerate(counts))
    best_t = None
    best_num = -1  # scores are >= 0; any valid cut beats this
    best_den = 1
    n0 = 0
    s0 = 0
    for t in range(len(counts) - 1):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = weighted_total - s0
        # between-class variance is proportional to (s0*n1 - s1*n0)^2 / (n0*n1),
        # compared across cuts as exact cross-multiplied integers
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t = t
            best_num = num
            best_den = den
    return best_t


def otsu_threshold(values, bins: int = OTSU_BINS):
    """Global Otsu threshold over a ``bins``-bin histogram of ``values``.

    Returns the threshold as the upper edge of the chosen cut bin, or
    None if the histogram is degenerate.
    """
    values = np.asarray(values, dtype=np.float64)
    lo = float(values.min())
    hi = float(values.max())
    if not hi > lo:
        return None
    hist, edges = np.histogram(values, bins=bins, range=(lo, hi))
    cut = otsu_cut(hist)
    if cut is None:
        return None
    return float(edges[cut + 1])


def _window_starts(extent, window, stride):
    starts = list(range(0, extent - window + 1, stride))
    last = extent - window
    if not starts or starts[-1] != last:
        starts.append(last)
    return starts


def _tent(start, window):
    # positive tent weight over [start, start+window), peaked at the center
    center = start + (window - 1) / 2.0
    coords = np.arange(start, start + window, dtype=np.float64)
    return np.maximum(1.0 - np.abs(coords - center) / (window / 2.0), 1e-3)


def threshold(h: ScoreRaster, policy: ThresholdPolicy) -> ChangeMap:
    """Binarize a high-means-change map.

    GLOBAL_OTSU picks one threshold for the whole map. LOCAL_ADAPTIVE runs
    Otsu per sliding window and blends the window thresholds bilinearly
    into a per-pixel decision surface; low-contrast windows fall back to
    the global threshold. A pixel is changed iff its value exceeds the
    threshold at that pixel. A (near-)constant map yields no change.
    """
    if h.polarity is not Polarity.HIGH_MEANS_CHANGE:
        raise ValueError("threshold expects a high-means-change map")
    values = h.values.astype(np.float64)
    rows, cols = values.shape
    lo, hi = float(values.min()), float(values.max())
    global_tau = otsu_threshold(values)
    if h.degenerate or global_tau is None:
        return ChangeMap(np.zeros(values.shape, dtype=np.uint8))

    if policy.mode is ThresholdMode.GLOBAL_OTSU:
        return ChangeMap((values > global_tau).astype(np.uint8))

    window = min(policy.window, rows, cols)
    stride = min(policy.effective_stride, window)
    min_range = policy.min_contrast * (hi - lo)
    tau_acc = np.zeros_like(values)
    weight_acc = np.zeros_like(values)
    for r0 in _window_starts(rows, window, stride):
        wr = _tent(r0, window)[:, None]
        for c0 in _window_starts(cols, window, stride):
            sub = values[r0 : r0 + window, c0 : c0 + window]
            if float(sub.max() - sub.min()) < min_range:
                tau_w = global_tau
            else:
                tau_w = otsu_threshold(sub)
                if tau_w is None:
                    tau_w = global_tau
            wc = _tent(c0, window)[None, :]
            w = wr * wc
            tau_acc[r0 : r0 + window, c0 : c0 + window] += tau_w * w
            weight_acc[r0 : r0 + window, c0 : c0 + window] += w
    tau_surface = tau_acc / weight_acc
    return ChangeMap((values > tau_surface).astype(np.uint8))


def detect_scene(
    scene: BitemporalScene,
    generator: GeneratorNet,
    discriminator: DiscriminatorNet,
    policy: ThresholdPolicy,
    noise: GeneratorNoise | None = None,
    *,
    patch_size: int = 128,
    seed: int = 0,
    fuse_mode: FuseMode = FuseMode.POLARITY_ALIGNED,
    provenance: dict | None = None,
) -> DetectionResult:
    """Run the full chain over a normalized scene.

    Tiles the scene, scores each patch, stitches the patch maps at their
    origins, fuses once at scene level, and thresholds once at scene
    level. The generator's dropout is keyed by (seed, patch index), so
    the result is reproducible regardless of patch order.
    """
    pairs = tile(scene, patch_size)
    er_tiles, sr_tiles, sg_tiles = [], [], []
    for pair in pairs:
        recon = generator_forward(
            generator,
            pair.x1_patch,
            noise=noise,
            rng_seed=seeding.torch_seed_for(seed, seeding.INFER, pair.index),
        )
        er_tiles.append((pair.origin, reconstruction_error_map(pair.partner, recon).values))
        s_real, s_gen = score_maps(discriminator, pair.x1_patch, pair.partner, recon)
        sr_tiles.append((pair.origin, s_real.values))
        sg_tiles.append((pair.origin, s_gen.values))

    n_rows = (scene.height // patch_size) * patch_size
    n_cols = (scene.width // patch_size) * patch_size
    shape = (n_rows, n_cols)
    e_r = ScoreRaster(stitch(er_tiles, shape), ScoreKind.E_R, Polarity.HIGH_MEANS_CHANGE)
    s_real = ScoreRaster(stitch(sr_tiles, shape), ScoreKind.S_REAL_PAIR, Polarity.HIGH_MEANS_CHANGE)
    s_gen = ScoreRaster(stitch(sg_tiles, shape), ScoreKind.S_GEN_PAIR, Polarity.HIGH_MEANS_CHANGE)
    s_dif = difference_map(s_real, s_gen)
    fused = fuse(e_r, s_dif, mode=fuse_mode)
    change = threshold(fused, policy)
    if provenance:
        change.provenance.update(provenance)
    return DetectionResult(
        change_map=change, e_r=e_r, s_dif=s_dif, fused=fused, s_real=s_real, s_gen=s_gen
    )
