"""Deterministic random streams derived from one run seed.

Every consumer gets its own child of a numpy SeedSequence keyed by a stream id
(and optionally an index such as env number or episode), so no two consumers
ever share generator state.
"""
import numpy as np

SEED_MASK = (1 << 64) - 1

# Stream ids
WORLD = 0
TARGET = 1
NOISE = 2
POLICY_INIT = 3
ACTION_SAMPLING = 4
MINIBATCH = 5
EPISODE = 6


def derive_seed(seed: int, *path: int) -> int:
    """64-bit seed for the child stream at `path` below `seed`."""
    seq = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, *path: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(seq))
