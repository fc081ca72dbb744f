"""Counter-based 64-bit hashing (splitmix64 finalizer).

Every random quantity in the simulator is a pure function of a 64-bit key and
a counter, so walks can be realized lazily, out of order, and identically by
both kernel backends. The functions here operate elementwise on uint64
arrays (numpy wraps silently there); the numba kernels carry scalar twins that
must stay bit-identical, which the test suite checks.
"""

import numpy as np

M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
INV53 = 1.0 / 9007199254740992.0

# stream tags keep the different uses of a seed apart
TAG_PARTICLE = np.uint64(0x5041525449434C45)
TAG_COUNT = np.uint64(0x434F554E54535452)
TAG_CLOCK = np.uint64(0x434C4F434B535452)
TAG_BOND = np.uint64(0x424F4E4453545245)
TAG_AGG = np.uint64(0x4147475354524541)
TAG_REPLICA = np.uint64(0x5245504C49434153)


def mix64_np(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> S30)) * M1
        z = (z ^ (z >> S27)) * M2
        return z ^ (z >> S31)


def fold_np(h, v):
    with np.errstate(over="ignore"):
        return mix64_np(h ^ (v + GOLDEN))


def to_unit_np(bits):
    return (bits >> S11).astype(np.float64) * INV53


def counter_bits_np(key, k):
    k = np.asarray(k).astype(np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(key + k * GOLDEN)


def as_u64(x):
    """Reinterpret signed integers as uint64 (two's complement), elementwise."""
    a = np.asarray(x, dtype=np.int64)
    return a.view(np.uint64)


def seed_word(seed):
    """Normalize a user seed (any non-negative int < 2**64) to np.uint64."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return np.uint64(seed)


def replica_seed(base_seed, index):
    """Seed of replica ``index`` derived from a base seed (stable, collision-free in practice)."""
    h = mix64_np(seed_word(base_seed) ^ TAG_REPLICA)
    h = fold_np(h, np.uint64(index))
    return int(h)


def replica_seeds(base_seed, count):
    """Vectorized :func:`replica_seed` for indices 0..count-1 (uint64 array)."""
    h = mix64_np(seed_word(base_seed) ^ TAG_REPLICA)
    return fold_np(np.full(count, h, dtype=np.uint64), np.arange(count, dtype=np.uint64))


def particle_keys_np(seed, coords, j):
    """Walk keys of particles ``j`` originally sleeping at ``coords`` (shape (K, d))."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    h = np.full(coords.shape[0], mix64_np(seed_word(seed) ^ TAG_PARTICLE), dtype=np.uint64)
    for i in range(coords.shape[1]):
        h = fold_np(h, as_u64(coords[:, i]))
    return fold_np(h, np.asarray(j, dtype=np.int64).astype(np.uint64))


def site_words_np(seed, tag, coords):
    """Per-site hash words for the stream ``tag`` (shape (K,))."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    h = np.full(coords.shape[0], mix64_np(seed_word(seed) ^ tag), dtype=np.uint64)
    for i in range(coords.shape[1]):
        h = fold_np(h, as_u64(coords[:, i]))
    return h
