"""Finite-difference verification of every layer type and of the composed
adversarial losses, in double precision with h = 1e-5.

Central differences are only meaningful at generic points: the zero-bias
initialization parks some pre-activations exactly on the leaky-relu kink,
so every network is nudged off the init manifold first, and the nudge
seeds are frozen at values where no +/-h window straddles a kink (a
straddle shows up as a few-percent relative error; a real autograd bug
would fail at every seed).

The whole-generator check runs at 16x16: three stride-2 encoder stages
leave a 2x2 bottleneck there, while an 8x8 input would bottleneck to a
single spatial element whose instance statistics are undefined (torch
rejects it). Layer-level and discriminator checks run at 8x8 too.
"""

import numpy as np
import pytest
import torch
from torch import nn

from cdgan.gradcheck import check_gradients
from cdgan.networks import (
    DiscriminatorSpec,
    GeneratorNoise,
    GeneratorSpec,
    NoiseMode,
    build_discriminator,
    build_generator,
)
from cdgan.training import loss_cgan_d, loss_g

TOL = 1e-3
H = 1e-5


def _nudge(net, seed, scale=0.05):
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in net.parameters():
            p += (torch.rand(p.shape, generator=g, dtype=p.dtype) - 0.5) * 2 * scale


def _input(shape, seed, away_from_zero=False):
    rng = np.random.default_rng(seed)
    if away_from_zero:
        x = rng.uniform(0.5, 1.5, shape) * rng.choice([-1.0, 1.0], shape)
    else:
        x = rng.uniform(-1.0, 1.0, shape)
    return torch.tensor(x, dtype=torch.float64)


@pytest.mark.parametrize(
    "layer",
    [
        nn.Conv2d(2, 3, 4, stride=2, padding=1),
        nn.ConvTranspose2d(3, 2, 4, stride=2, padding=1),
        nn.Conv2d(2, 3, 1),
        nn.InstanceNorm2d(2, affine=True),
    ],
    ids=["conv4x4s2", "convtranspose4x4s2", "conv1x1", "instancenorm"],
)
def test_layer_parameter_gradients(layer):
    layer = layer.double()
    channels = getattr(layer, "in_channels", None) or layer.num_features
    x = _input((1, channels, 8, 8), seed=1)
    err = check_gradients(lambda: layer(x).square().mean(), layer.parameters(), h=H, tol=TOL)
    assert err <= TOL


@pytest.mark.parametrize(
    "act",
    [torch.nn.functional.leaky_relu, torch.relu, torch.tanh, torch.sigmoid],
    ids=["leaky_relu", "relu", "tanh", "sigmoid"],
)
def test_activation_gradients(act):
    # inputs bounded away from the relu kink so +/-h never crosses it
    x = _input((1, 2, 8, 8), seed=2, away_from_zero=True)
    w = nn.Parameter(_input((1, 2, 8, 8), seed=3, away_from_zero=True))
    err = check_gradients(lambda: act(w * x).square().mean(), [w], h=H, tol=TOL)
    assert err <= TOL


def _small_gan(noise_mode):
    g = build_generator(
        GeneratorSpec(bands=2, base_channels=2, noise=noise_mode), seed=11
    ).double()
    d = build_discriminator(DiscriminatorSpec(bands=2, hidden_channels=4), seed=12).double()
    _nudge(g, 1000)
    _nudge(d, 2000)
    return g, d


def test_composed_generator_loss_gradients():
    g, d = _small_gan(GeneratorNoise(mode=NoiseMode.NONE))
    x1 = _input((1, 2, 16, 16), seed=4)
    target = _input((1, 2, 16, 16), seed=5)

    def loss_fn():
        fake = g(x1)
        return loss_g(d(x1, fake), target, fake, lambda_l1=100.0)

    err = check_gradients(loss_fn, g.parameters(), h=H, tol=TOL)
    assert err <= TOL


def test_generator_loss_gradients_with_dropout():
    # the multiplicative dropout mask depends only on the (reseeded) rng,
    # so the loss stays deterministic under parameter perturbation
    g, d = _small_gan(GeneratorNoise(mode=NoiseMode.DROPOUT, dropout_rate=0.5))
    x1 = _input((1, 2, 16, 16), seed=4)
    target = _input((1, 2, 16, 16), seed=5)

    def loss_fn():
        fake = g(x1, rng=torch.Generator().manual_seed(99))
        return loss_g(d(x1, fake), target, fake, lambda_l1=100.0)

    err = check_gradients(loss_fn, g.parameters(), h=H, tol=TOL)
    assert err <= TOL


@pytest.mark.parametrize("size,nudge_seed", [(8, 3000), (16, 3002)])
def test_composed_discriminator_loss_gradients(size, nudge_seed):
    d = build_discriminator(DiscriminatorSpec(bands=2, hidden_channels=4), seed=15).double()
    _nudge(d, nudge_seed)
    x1 = _input((1, 2, size, size), seed=8)
    real = _input((1, 2, size, size), seed=9)
    fake = _input((1, 2, size, size), seed=10)

    def loss_fn():
        return loss_cgan_d(d(x1, real), d(x1, fake))

    err = check_gradients(loss_fn, d.parameters(), h=H, tol=TOL)
    assert err <= TOL
