"""Counter-based random streams.

Every replicate ``k`` of a run seeded with ``seed`` draws from its own
Philox stream keyed by ``(seed, k)``; the ensemble is therefore the same
whether replicates are generated serially or by a thread pool.
"""

from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    """Validates a 64-bit unsigned seed.

    Args:
        seed: The master seed.

    Returns:
        The seed as a Python integer.

    Raises:
        ValueError: If the seed is negative or does not fit in 64 bits.
    """
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(
            f"Seed must be a 64-bit unsigned integer, got {seed}."
        )
    return seed


def stream(seed: int, k: int = 0) -> np.random.Generator:
    """Returns the random generator of replicate ``k``.

    Args:
        seed: Master seed (64-bit unsigned).
        k: Replicate index.

    Returns:
        A ``numpy.random.Generator`` backed by a Philox bit generator.
    """
    seq = np.random.SeedSequence([check_seed(seed), int(k)])
    return np.random.Generator(np.random.Philox(seq))
