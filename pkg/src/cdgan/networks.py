"""Generator and discriminator networks.

The generator is a six-layer autoencoder: three stride-2 convolutions
down, three stride-2 transposed convolutions up, with skip connections
concatenating matching encoder features and a tanh output. Its stochastic
input is realized as seeded dropout in the decoder, applied at training
and inference alike (or disabled for deterministic ablation).

The discriminator is pixel-wise: two 1x1 convolutions over the
channel-concatenated (conditioning, candidate) pair, sigmoid output. Its
receptive field is a single pixel, so every output value is a per-pixel
likelihood that the pair is real and unchanged.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .errors import BadSpatialDims, ShapeMismatch

LEAKY_SLOPE = 0.2
INIT_STD = 0.02


class NoiseMode(str, Enum):
    DROPOUT = "dropout"
    NONE = "none"


@dataclass(frozen=True)
class GeneratorNoise:
    """How the generator's noise input is realized."""

    mode: NoiseMode = NoiseMode.DROPOUT
    dropout_rate: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")


@dataclass(frozen=True)
class GeneratorSpec:
    bands: int
    base_channels: int = 64
    noise: GeneratorNoise = field(default_factory=GeneratorNoise)

    def to_dict(self):
        return {
            "bands": self.bands,
            "base_channels": self.base_channels,
            "noise_mode": self.noise.mode.value,
            "dropout_rate": self.noise.dropout_rate,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            bands=int(d["bands"]),
            base_channels=int(d["base_channels"]),
            noise=GeneratorNoise(NoiseMode(d["noise_mode"]), float(d["dropout_rate"])),
        )


@dataclass(frozen=True)
class DiscriminatorSpec:
    bands: int
    hidden_channels: int = 64

    def to_dict(self):
        return {"bands": self.bands, "hidden_channels": self.hidden_channels}

    @classmethod
    def from_dict(cls, d):
        return cls(bands=int(d["bands"]), hidden_channels=int(d["hidden_channels"]))


def _norm(channels):
    # Per-sample feature normalization: no running stats, so forward
    # behavior does not depend on train/eval mode or batch composition.
    return nn.InstanceNorm2d(channels, affine=True)


class GeneratorNet(nn.Module):
    """Three-down / three-up skip-connected autoencoder, tanh output."""

    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        b, c = spec.bands, spec.base_channels
        self.enc1 = nn.Conv2d(b, c, 4, stride=2, padding=1)
        self.enc2 = nn.Conv2d(c, 2 * c, 4, stride=2, padding=1)
        self.enc2_norm = _norm(2 * c)
        self.enc3 = nn.Conv2d(2 * c, 4 * c, 4, stride=2, padding=1)
        self.enc3_norm = _norm(4 * c)
        self.dec1 = nn.ConvTranspose2d(4 * c, 2 * c, 4, stride=2, padding=1)
        self.dec1_norm = _norm(2 * c)
        self.dec2 = nn.ConvTranspose2d(4 * c, c, 4, stride=2, padding=1)
        self.dec2_norm = _norm(c)
        self.dec3 = nn.ConvTranspose2d(2 * c, b, 4, stride=2, padding=1)

    def _dropout(self, x, noise, rng):
        if noise.mode is NoiseMode.NONE or noise.dropout_rate == 0.0:
            return x
        keep = torch.rand(x.shape, generator=rng, dtype=x.dtype, device=x.device)
        mask = (keep >= noise.dropout_rate).to(x.dtype)
        return x * mask / (1.0 - noise.dropout_rate)

    def forward(self, x, *, noise: GeneratorNoise | None = None, rng: torch.Generator | None = None):
        """Map an (N, B, P, P) batch to same-shaped output in [-1, 1].

        ``rng`` drives the dropout masks and must be supplied whenever
        dropout is active; reseeding it reproduces the exact output.
        """
        noise = noise if noise is not None else self.spec.noise
        if noise.mode is NoiseMode.DROPOUT and noise.dropout_rate > 0.0 and rng is None:
            raise ValueError("dropout noise requires an rng for reproducibility")
        if x.shape[-1] % 8 != 0 or x.shape[-2] % 8 != 0:
            raise BadSpatialDims(
                f"spatial dims must be divisible by 8, got {tuple(x.shape[-2:])}"
            )
        e1 = F.leaky_relu(self.enc1(x), LEAKY_SLOPE)
        e2 = F.leaky_relu(self.enc2_norm(self.enc2(e1)), LEAKY_SLOPE)
        e3 = F.leaky_relu(self.enc3_norm(self.enc3(e2)), LEAKY_SLOPE)
        d1 = F.relu(self.dec1_norm(self.dec1(e3)))
        d1 = self._dropout(d1, noise, rng)
        d2 = F.relu(self.dec2_norm(self.dec2(torch.cat([d1, e2], dim=1))))
        d2 = self._dropout(d2, noise, rng)
        return torch.tanh(self.dec3(torch.cat([d2, e1], dim=1)))


class DiscriminatorNet(nn.Module):
    """Two 1x1 convolutions: (2B -> hidden, leaky) then (hidden -> 1, sigmoid)."""

    def __init__(self, spec: DiscriminatorSpec):
        super().__init__()
        self.spec = spec
        self.conv1 = nn.Conv2d(2 * spec.bands, spec.hidden_channels, 1)
        self.conv2 = nn.Conv2d(spec.hidden_channels, 1, 1)

    def forward(self, x1, candidate):
        """Per-pixel real-unchanged likelihood, shape (N, 1, P, P) in (0, 1)."""
        if x1.shape != candidate.shape:
            raise ShapeMismatch(
                f"conditioning {tuple(x1.shape)} vs candidate {tuple(candidate.shape)}"
            )
        h = F.leaky_relu(self.conv1(torch.cat([x1, candidate], dim=1)), LEAKY_SLOPE)
        return torch.sigmoid(self.conv2(h))


def init_params(net: nn.Module, seed: int) -> nn.Module:
    """Initialize in place: conv weights ~ N(0, 0.02^2), normalization
    scales ~ N(1, 0.02^2), all biases zero. Deterministic per seed."""
    g = torch.Generator().manual_seed(int(seed) & ((1 << 63) - 1))
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
                module.weight.copy_(
                    torch.randn(module.weight.shape, generator=g, dtype=module.weight.dtype)
                    * INIT_STD
                )
                if module.bias is not None:
                    module.bias.zero_()
            elif isinstance(module, nn.InstanceNorm2d):
                module.weight.copy_(
                    1.0
                    + torch.randn(module.weight.shape, generator=g, dtype=module.weight.dtype)
                    * INIT_STD
                )
                module.bias.zero_()
    return net


def build_generator(spec: GeneratorSpec, seed: int | None = None) -> GeneratorNet:
    net = GeneratorNet(spec)
    if seed is not None:
        init_params(net, seed)
    return net


def build_discriminator(spec: DiscriminatorSpec, seed: int | None = None) -> DiscriminatorNet:
    net = DiscriminatorNet(spec)
    if seed is not None:
        init_params(net, seed)
    return net


def parameter_count(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


def to_nchw(patch) -> torch.Tensor:
    """(P, P, B) numpy tile -> (1, B, P, P) float32 tensor."""
    arr = np.ascontiguousarray(np.asarray(patch, dtype=np.float32).transpose(2, 0, 1))
    return torch.from_numpy(arr).unsqueeze(0)


def to_hwc(tensor) -> np.ndarray:
    """(1, B, P, P) tensor -> (P, P, B) float32 numpy tile."""
    return tensor.detach().squeeze(0).permute(1, 2, 0).contiguous().numpy().astype(np.float32)


def generator_forward(net: GeneratorNet, x1_patch, noise: GeneratorNoise | None = None, rng_seed: int = 0):
    """Run one (P, P, B) tile through the generator.

    Deterministic for fixed weights and ``rng_seed``. P must be divisible
    by 8 (three stride-2 stages each way).
    """
    x1_patch = np.asarray(x1_patch)
    if x1_patch.ndim != 3:
        raise ShapeMismatch(f"expected (P, P, B) tile, got shape {x1_patch.shape}")
    if x1_patch.shape[0] % 8 != 0 or x1_patch.shape[1] % 8 != 0:
        raise BadSpatialDims(
            f"patch size must be divisible by 8, got {x1_patch.shape[:2]}"
        )
    rng = torch.Generator().manual_seed(int(rng_seed) & ((1 << 63) - 1))
    with torch.no_grad():
        out = net(to_nchw(x1_patch), noise=noise, rng=rng)
    return to_hwc(out)


def discriminator_forward(net: DiscriminatorNet, x1_patch, candidate):
    """Score one tile pair; returns a (P, P) float32 map in (0, 1)."""
    x1_patch = np.asarray(x1_patch)
    candidate = np.asarray(candidate)
    if x1_patch.shape != candidate.shape:
        raise ShapeMismatch(
            f"conditioning {x1_patch.shape} vs candidate {candidate.shape}"
        )
    if x1_patch.ndim != 3:
        raise ShapeMismatch(f"expected (P, P, B) tiles, got shape {x1_patch.shape}")
    with torch.no_grad():
        out = net(to_nchw(x1_patch), to_nchw(candidate))
    return out.squeeze(0).squeeze(0).numpy().astype(np.float32)
