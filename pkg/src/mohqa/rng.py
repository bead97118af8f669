"""Reproducible random number generation.

All stochastic components draw from numpy's Philox bit generator, a
documented counter-based generator whose streams are bit-reproducible
across platforms. Independent substreams are derived with SeedSequence
spawning so that environment, agent and experiment-level randomness
never share a stream.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "spawn_rngs", "mix_seed"]


def make_rng(seed: int) -> np.random.Generator:
    """Generator backed by Philox, keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent Philox streams derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def mix_seed(*parts: int) -> int:
    """Deterministically combine several integers into one 64-bit seed."""
    ss = np.random.SeedSequence(list(parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
