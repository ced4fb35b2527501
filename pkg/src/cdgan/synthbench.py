"""Synthetic bitemporal scenes with exactly-known change masks.

A scene is a smooth multi-octave texture (t1) plus, at t2, an optional
global radiometric shift, intensity shifts inside planted blob
footprints, and additive sensor noise. The reference mask is the union
of the blob footprints, recorded during construction — never recovered
by differencing the rasters afterwards.

The global shift is deliberately *not* part of the mask: a radiometric
offset affects every pixel equally and a detector that learns unchanged
semantics (rather than pixel equality) should not flag it.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.ndimage import gaussian_filter

from . import seeding
from .data import BitemporalScene
from .errors import BlobOutOfBounds


class BlobKind(Enum):
    ELLIPSE = "ellipse"
    RECTANGLE = "rectangle"


@dataclass(frozen=True)
class Blob:
    """One planted change region.

    ``center`` is (row, col), ``radii`` the half-extents (row, col).
    ``shift`` is the per-band intensity delta applied inside the
    footprint; at least one band must actually move.
    """

    kind: BlobKind
    center: tuple[int, int]
    radii: tuple[int, int]
    shift: tuple[float, ...]

    def __post_init__(self):
        if self.radii[0] < 1 or self.radii[1] < 1:
            raise ValueError(f"radii must be >= 1, got {self.radii}")
        if not any(abs(s) > 0 for s in self.shift):
            raise ValueError("blob shift must move at least one band")

    def footprint(self, height: int, width: int) -> np.ndarray:
        """Boolean (H, W) mask of the blob's pixels.

        Raises BLOB_OUT_OF_BOUNDS when the bounding box leaves the scene.
        """
        cr, cc = self.center
        rr, rc = self.radii
        if cr - rr < 0 or cr + rr >= height or cc - rc < 0 or cc + rc >= width:
            raise BlobOutOfBounds(
                f"blob at {self.center} with radii {self.radii} "
                f"exceeds {height}x{width} scene"
            )
        rows = np.arange(height)[:, None]
        cols = np.arange(width)[None, :]
        if self.kind is BlobKind.ELLIPSE:
            return ((rows - cr) / rr) ** 2 + ((cols - cc) / rc) ** 2 <= 1.0
        return (np.abs(rows - cr) <= rr) & (np.abs(cols - cc) <= rc)


@dataclass(frozen=True)
class SynthSpec:
    size: tuple[int, int] = (256, 256)
    bands: int = 3
    octaves: int = 4
    persistence: float = 0.55
    base_sigma: float = 32.0
    change_blobs: tuple[Blob, ...] = ()
    radiometric_shift: tuple[float, ...] = ()
    sensor_noise_sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.size[0] < 16 or self.size[1] < 16:
            raise ValueError(f"scene size too small: {self.size}")
        if self.bands < 1:
            raise ValueError("bands must be >= 1")
        if self.octaves < 1:
            raise ValueError("octaves must be >= 1")
        if self.sensor_noise_sigma < 0:
            raise ValueError("sensor_noise_sigma must be >= 0")
        if self.radiometric_shift and len(self.radiometric_shift) != self.bands:
            raise ValueError("radiometric_shift must have one entry per band")
        for blob in self.change_blobs:
            if len(blob.shift) != self.bands:
                raise ValueError("blob shift must have one entry per band")


def _octave_field(rng, shape, octaves, persistence, base_sigma):
    total = np.zeros(shape, dtype=np.float64)
    for k in range(octaves):
        white = rng.standard_normal(shape)
        total += persistence**k * gaussian_filter(white, base_sigma / 2**k)
    return total


def _to_unit(field):
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo)


def generate(spec: SynthSpec) -> BitemporalScene:
    """Build the bitemporal scene and its reference mask, all from the seed."""
    height, width = spec.size
    shared = _octave_field(
        seeding.rng_for(spec.seed, seeding.SYNTH, 0xFFFF),
        (height, width),
        spec.octaves,
        spec.persistence,
        spec.base_sigma,
    )
    x1 = np.empty((height, width, spec.bands), dtype=np.float64)
    for b in range(spec.bands):
        own = _octave_field(
            seeding.rng_for(spec.seed, seeding.SYNTH, b),
            (height, width),
            spec.octaves,
            spec.persistence,
            spec.base_sigma,
        )
        # shared luminance plus per-band variation, scaled into [0.1, 0.8]
        # so planted shifts of ~0.25 rarely saturate the [0, 1] range
        x1[:, :, b] = _to_unit(0.65 * shared + 0.35 * own) * 0.7 + 0.1

    x2 = x1.copy()
    if spec.radiometric_shift:
        x2 += np.asarray(spec.radiometric_shift, dtype=np.float64)

    mask = np.zeros((height, width), dtype=np.uint8)
    for blob in spec.change_blobs:
        foot = blob.footprint(height, width)
        mask[foot] = 1
        for b, s in enumerate(blob.shift):
            x2[:, :, b][foot] += s

    if spec.sensor_noise_sigma > 0:
        noise_rng = seeding.rng_for(spec.seed, seeding.SYNTH, 0xBEEF)
        x2 += noise_rng.normal(0.0, spec.sensor_noise_sigma, x2.shape)

    x1 = np.clip(x1, 0.0, 1.0).astype(np.float32)
    x2 = np.clip(x2, 0.0, 1.0).astype(np.float32)
    return BitemporalScene(x1=x1, x2=x2, reference_mask=mask)


def change_fraction(scene: BitemporalScene) -> float:
    if scene.reference_mask is None:
        return 0.0
    return float(scene.reference_mask.mean())


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: SynthSpec
    expected_fraction: tuple[float, float]


def standard_suite(seed: int = 2024) -> list[Scenario]:
    """Fixed scenario set spanning ~0%–15% planted change."""
    shift_up = (0.28, -0.24, 0.3)
    shift_down = (-0.3, 0.26, -0.27)
    return [
        Scenario(
            "null",
            SynthSpec(seed=seed),
            (0.0, 0.0),
        ),
        Scenario(
            "blobs-2pct",
            SynthSpec(
                seed=seed + 1,
                change_blobs=(
                    Blob(BlobKind.ELLIPSE, (96, 120), (23, 18), shift_up),
                ),
            ),
            (0.01, 0.03),
        ),
        Scenario(
            "blobs-5pct-shift",
            SynthSpec(
                seed=seed + 2,
                change_blobs=(
                    Blob(BlobKind.ELLIPSE, (80, 70), (30, 25), shift_up),
                    Blob(BlobKind.RECTANGLE, (180, 170), (16, 20), shift_down),
                ),
                radiometric_shift=(0.04, -0.03, 0.05),
            ),
            (0.04, 0.07),
        ),
        Scenario(
            "blobs-10pct",
            SynthSpec(
                seed=seed + 3,
                change_blobs=(
                    Blob(BlobKind.ELLIPSE, (70, 80), (34, 30), shift_up),
                    Blob(BlobKind.RECTANGLE, (170, 180), (22, 25), shift_down),
                    Blob(BlobKind.ELLIPSE, (190, 60), (18, 20), shift_up),
                ),
            ),
            (0.08, 0.12),
        ),
        Scenario(
            "blobs-15pct-shift",
            SynthSpec(
                seed=seed + 4,
                change_blobs=(
                    Blob(BlobKind.ELLIPSE, (75, 75), (40, 35), shift_up),
                    Blob(BlobKind.RECTANGLE, (180, 170), (28, 30), shift_down),
                    Blob(BlobKind.ELLIPSE, (60, 200), (20, 22), shift_up),
                ),
                radiometric_shift=(-0.05, 0.04, -0.04),
            ),
            (0.12, 0.18),
        ),
    ]


def scenario_by_name(name: str, seed: int = 2024) -> Scenario:
    for scenario in standard_suite(seed):
        if scenario.name == name:
            return scenario
    names = ", ".join(s.name for s in standard_suite(seed))
    raise KeyError(f"unknown scenario {name!r}; available: {names}")
