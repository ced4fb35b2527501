"""Deterministic derivation of random streams.

Every stochastic component derives its generator from
(master seed, stream tag, *indices) through numpy's SeedSequence, so
results never depend on the order in which work items are processed.
"""

import numpy as np

# Stream tags keep independent consumers of the same master seed apart.
NOISE = 0xC001     # synthetic-pair sensor noise, keyed by (patch, epoch)
ORDER = 0xC002     # per-epoch batch shuffling
DROPOUT = 0xC003   # generator dropout during training, keyed by (epoch, step)
HOLDOUT = 0xC004   # fixed dropout for held-out reconstruction scoring
INFER = 0xC005     # fixed dropout at detection time, keyed by patch index
SYNTH = 0xC006     # synthetic benchmark scene generation, keyed by band
INIT_G = 0xC007    # generator weight initialization
INIT_D = 0xC008    # discriminator weight initialization

_MASK64 = (1 << 64) - 1


def _entropy(key):
    # SeedSequence wants non-negative ints; fold negatives through 64-bit
    # two's complement so e.g. epoch=-1 stays a valid, distinct key.
    return [int(k) & _MASK64 for k in key]


def rng_for(*key: int) -> np.random.Generator:
    """numpy Generator for the given stream key."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(key)))


def torch_seed_for(*key: int) -> int:
    """A 63-bit seed for a torch.Generator, derived from the same key space."""
    state = np.random.SeedSequence(_entropy(key)).generate_state(1, np.uint64)[0]
    return int(state) & ((1 << 63) - 1)
