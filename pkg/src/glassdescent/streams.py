"""Seed derivation for disorder instances and per-run random streams.

Every stream is a pure function of its coordinates, so results do not
depend on how work is split across workers.
"""

import struct

import numpy as np

_DISORDER = 0
_RUN = 1


def p_key(p: float) -> int:
    """Exact integer key for a probability (its IEEE-754 bit pattern)."""
    return struct.unpack("<Q", struct.pack("<d", float(p) + 0.0))[0]


def disorder_seed(master_seed: int, n: int, d: int) -> int:
    """64-bit seed of disorder realization ``d`` at size ``n``.

    Independent of P, so every P value sees the same instances.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(_DISORDER, n, d))
    return int(ss.generate_state(1, np.uint64)[0])


def run_rng(master_seed: int, n: int, p: float, d: int, r: int) -> np.random.Generator:
    """Private stream of restart ``r`` on disorder ``d`` at size ``n`` and probability ``p``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(_RUN, n, p_key(p), d, r))
    return np.random.Generator(np.random.PCG64(ss))
