"""Self-supervised GAN change detection for bitemporal rasters.

Train a conditional generator/discriminator pair on synthetic unchanged
pairs built from the t1 image alone, then flag changes by fusing the
generator's reconstruction error with the discriminator's score drop.
"""

from .data import (
    BandStats,
    BitemporalScene,
    PartnerKind,
    PatchPair,
    SplitSpec,
    load_scene,
    normalize,
    denormalize,
    split,
    stitch,
    tile,
)
from .errors import PipelineError
from .metrics import ConfusionCounts, MetricsReport, confusion, evaluate
from .networks import (
    DiscriminatorNet,
    DiscriminatorSpec,
    GeneratorNet,
    GeneratorNoise,
    GeneratorSpec,
    NoiseMode,
    build_discriminator,
    build_generator,
)
from .pairs import NoiseSpec, build_training_set, synthesize_unchanged
from .scoring import (
    ChangeMap,
    DetectionResult,
    FuseMode,
    Polarity,
    ScoreKind,
    ScoreRaster,
    ThresholdMode,
    ThresholdPolicy,
    detect_scene,
    difference_map,
    fuse,
    otsu_threshold,
    reconstruction_error_map,
    threshold,
)
from .synthbench import Blob, BlobKind, SynthSpec, generate, standard_suite
from .training import TrainConfig, TrainResult, loss_cgan_d, loss_g, loss_l1, train

__version__ = "0.1.0"

__all__ = [
    "BandStats",
    "BitemporalScene",
    "Blob",
    "BlobKind",
    "ChangeMap",
    "ConfusionCounts",
    "DetectionResult",
    "DiscriminatorNet",
    "DiscriminatorSpec",
    "FuseMode",
    "GeneratorNet",
    "GeneratorNoise",
    "GeneratorSpec",
    "MetricsReport",
    "NoiseMode",
    "NoiseSpec",
    "PartnerKind",
    "PatchPair",
    "PipelineError",
    "Polarity",
    "ScoreKind",
    "ScoreRaster",
    "SplitSpec",
    "SynthSpec",
    "ThresholdMode",
    "ThresholdPolicy",
    "TrainConfig",
    "TrainResult",
    "build_discriminator",
    "build_generator",
    "build_training_set",
    "confusion",
    "denormalize",
    "detect_scene",
    "difference_map",
    "evaluate",
    "fuse",
    "generate",
    "load_scene",
    "loss_cgan_d",
    "loss_g",
    "loss_l1",
    "normalize",
    "otsu_threshold",
    "reconstruction_error_map",
    "split",
    "standard_suite",
    "stitch",
    "synthesize_unchanged",
    "threshold",
    "tile",
    "train",
]
