"""Seed derivation.

Every random stream in the package is derived from a master seed plus a
component name and integer indices, e.g. ``derive_seed(7, "rbbr_g", 3)`` for
the generator best response of iteration 3.  Names are hashed with CRC32 so
the derivation is stable across processes and Python versions.
"""

import zlib

import numpy as np


def derive_seed(master_seed, name, *indices):
    """Return a 63-bit integer seed for the stream ``name[indices]``."""
    key = [int(master_seed) & 0xFFFFFFFF, int(master_seed) >> 32 & 0xFFFFFFFF,
           zlib.crc32(name.encode("utf-8"))]
    key.extend(int(i) for i in indices)
    state = np.random.SeedSequence(key).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 ^ int(state[1])


def make_rng(master_seed, name, *indices):
    return np.random.default_rng(derive_seed(master_seed, name, *indices))
