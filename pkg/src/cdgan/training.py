"""Adversarial training on self-supervised unchanged pairs.

Each batch takes one discriminator step (real = (x1, x1+noise), fake =
(x1, G(x1, z)) detached) followed by one generator step. The generator
objective combines the non-saturating adversarial term with a weighted
mean-L1 reconstruction term; the discriminator minimizes the negated
minimax objective. All reductions are means so the loss weight is
independent of patch size and batch size.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import torch

from . import seeding
from .checkpoint import save_checkpoint, write_pointer
from .data import PartnerKind, PatchPair
from .errors import Divergence, ShapeMismatch
from .networks import DiscriminatorNet, GeneratorNet
from .pairs import NoiseSpec, build_training_set, synthesize_unchanged

LOG_EPS = 1e-7
LOG_HEADER = "epoch,step,d_loss,g_adv,g_l1,d_real,d_fake"


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 8
    momentum: float = 0.5
    learning_rate_g: float = 0.01
    learning_rate_d: float = 0.01
    lambda_l1: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lambda_l1 < 0:
            raise ValueError("lambda_l1 must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")


@dataclass
class StepRecord:
    epoch: int
    step: int
    d_loss: float
    g_adv: float
    g_l1: float
    d_real: float
    d_fake: float


@dataclass
class TrainLog:
    records: list[StepRecord] = field(default_factory=list)
    holdout_l1: list[tuple[int, float]] = field(default_factory=list)

    def write_csv(self, path):
        lines = [LOG_HEADER]
        for r in self.records:
            lines.append(
                f"{r.epoch},{r.step},{r.d_loss:.8g},{r.g_adv:.8g},"
                f"{r.g_l1:.8g},{r.d_real:.8g},{r.d_fake:.8g}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class TrainResult:
    generator: GeneratorNet
    discriminator: DiscriminatorNet
    log: TrainLog
    best_epoch: int | None = None
    checkpoint_dir: str | None = None


def _as_tensor(x):
    return x if isinstance(x, torch.Tensor) else torch.as_tensor(np.asarray(x))


def loss_l1(target, reconstruction):
    """Mean absolute elementwise difference."""
    target = _as_tensor(target)
    reconstruction = _as_tensor(reconstruction)
    if target.shape != reconstruction.shape:
        raise ShapeMismatch(f"{tuple(target.shape)} vs {tuple(reconstruction.shape)}")
    return torch.mean(torch.abs(target - reconstruction))


def loss_cgan_d(d_real_map, d_fake_map):
    """Discriminator loss: -[mean log D(real) + mean log(1 - D(fake))].

    Inputs are clamped away from {0, 1} before the log.
    """
    d_real = torch.clamp(_as_tensor(d_real_map), LOG_EPS, 1.0 - LOG_EPS)
    d_fake = torch.clamp(_as_tensor(d_fake_map), LOG_EPS, 1.0 - LOG_EPS)
    return -(torch.mean(torch.log(d_real)) + torch.mean(torch.log(1.0 - d_fake)))


def loss_g_adv(d_fake_map):
    """Non-saturating generator term: -mean log D(fake)."""
    d_fake = torch.clamp(_as_tensor(d_fake_map), LOG_EPS, 1.0 - LOG_EPS)
    return -torch.mean(torch.log(d_fake))


def loss_g(d_fake_map, target, reconstruction, lambda_l1):
    """Full generator objective: adversarial term plus weighted mean-L1."""
    return loss_g_adv(d_fake_map) + lambda_l1 * loss_l1(target, reconstruction)


def _stack(patches, attr):
    arrs = [np.asarray(getattr(p, attr), dtype=np.float32) for p in patches]
    batch = np.ascontiguousarray(np.stack(arrs).transpose(0, 3, 1, 2))
    return torch.from_numpy(batch)


def _ensure_finite(name, value, last_checkpoint):
    if not math.isfinite(value):
        raise Divergence(f"{name} became {value}", last_checkpoint=last_checkpoint)


def _holdout_l1(generator, holdout_pairs, cfg):
    with torch.no_grad():
        total = 0.0
        for pair in holdout_pairs:
            rng = torch.Generator().manual_seed(
                seeding.torch_seed_for(cfg.seed, seeding.HOLDOUT, pair.index)
            )
            x1 = _stack([pair], "x1_patch")
            recon = generator(x1, rng=rng)
            total += float(loss_l1(_stack([pair], "partner"), recon))
    return total / len(holdout_pairs)


def train(
    patches,
    split,
    noise: NoiseSpec,
    generator: GeneratorNet,
    discriminator: DiscriminatorNet,
    cfg: TrainConfig,
    *,
    checkpoint_dir=None,
    band_stats=None,
    config_hash: str = "",
    holdout_cap: int = 8,
    log_every: int = 0,
) -> TrainResult:
    """Run the adversarial loop over the split's train ids.

    Synthetic unchanged partners are resampled every epoch (keyed by the
    noise seed, patch index, and epoch), so parallel batch assembly or
    reordering cannot change results. Held-out t1 patches from the test
    ids get fixed synthetic partners and track the "best" checkpoint by
    reconstruction L1. Raises DIVERGENCE if any loss goes non-finite.
    """
    if not split.train_ids:
        raise ValueError("empty training set")
    by_index = {p.index: p for p in patches}
    train_ids = sorted(split.train_ids)

    holdout_ids = sorted(split.test_ids)[: max(0, holdout_cap)]
    holdout_pairs = [
        PatchPair(
            index=i,
            origin=by_index[i].origin,
            x1_patch=by_index[i].x1_patch,
            partner=synthesize_unchanged(
                by_index[i].x1_patch, noise, patch_index=i, epoch=-1
            ),
            partner_kind=PartnerKind.SYNTHETIC_UNCHANGED,
        )
        for i in holdout_ids
    ]

    opt_g = torch.optim.SGD(
        generator.parameters(), lr=cfg.learning_rate_g, momentum=cfg.momentum
    )
    opt_d = torch.optim.SGD(
        discriminator.parameters(), lr=cfg.learning_rate_d, momentum=cfg.momentum
    )

    log = TrainLog()
    best_l1 = math.inf
    best_epoch = None
    last_checkpoint = None

    for epoch in range(1, cfg.epochs + 1):
        epoch_pairs = build_training_set(patches, split, noise, epoch=epoch)
        order = seeding.rng_for(cfg.seed, seeding.ORDER, epoch).permutation(len(epoch_pairs))
        step = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [epoch_pairs[i] for i in order[start : start + cfg.batch_size]]
            x1 = _stack(batch, "x1_patch")
            x2_tilde = _stack(batch, "partner")
            rng = torch.Generator().manual_seed(
                seeding.torch_seed_for(cfg.seed, seeding.DROPOUT, epoch, step)
            )
            fake = generator(x1, rng=rng)

            d_real_map = discriminator(x1, x2_tilde)
            d_fake_map = discriminator(x1, fake.detach())
            d_loss = loss_cgan_d(d_real_map, d_fake_map)
            d_loss_val = float(d_loss.detach())
            _ensure_finite("d_loss", d_loss_val, last_checkpoint)
            opt_d.zero_grad()
            d_loss.backward()
            opt_d.step()

            g_adv = loss_g_adv(discriminator(x1, fake))
            g_l1 = loss_l1(x2_tilde, fake)
            g_total = g_adv + cfg.lambda_l1 * g_l1
            g_adv_val = float(g_adv.detach())
            g_l1_val = float(g_l1.detach())
            _ensure_finite("g_adv", g_adv_val, last_checkpoint)
            _ensure_finite("g_l1", g_l1_val, last_checkpoint)
            opt_g.zero_grad()
            g_total.backward()
            opt_g.step()

            log.records.append(
                StepRecord(
                    epoch=epoch,
                    step=step,
                    d_loss=d_loss_val,
                    g_adv=g_adv_val,
                    g_l1=g_l1_val,
                    d_real=float(d_real_map.detach().mean()),
                    d_fake=float(d_fake_map.detach().mean()),
                )
            )
            step += 1

        if holdout_pairs:
            held = _holdout_l1(generator, holdout_pairs, cfg)
            log.holdout_l1.append((epoch, held))
        else:
            held = None

        if checkpoint_dir is not None:
            epoch_dir = f"epoch_{epoch:03d}"
            save_checkpoint(
                f"{checkpoint_dir}/{epoch_dir}",
                generator,
                discriminator,
                band_stats=band_stats,
                config_hash=config_hash,
                seed=cfg.seed,
                extra={"epoch": epoch, "holdout_l1": held},
            )
            write_pointer(checkpoint_dir, "latest", epoch_dir)
            last_checkpoint = f"{checkpoint_dir}/{epoch_dir}"
            if held is None or held < best_l1:
                write_pointer(checkpoint_dir, "best", epoch_dir)
        if held is not None and held < best_l1:
            best_l1 = held
            best_epoch = epoch
        if log_every and epoch % log_every == 0:
            r = log.records[-1]
            print(
                f"epoch {epoch:3d}  d_loss {r.d_loss:.4f}  g_adv {r.g_adv:.4f}  "
                f"g_l1 {r.g_l1:.5f}" + (f"  holdout_l1 {held:.5f}" if held is not None else "")
            )

    return TrainResult(
        generator=generator,
        discriminator=discriminator,
        log=log,
        best_epoch=best_epoch,
        checkpoint_dir=str(checkpoint_dir) if checkpoint_dir is not None else None,
    )
