"""Seedable random number generation.

All randomness in the package flows through numpy's PCG64 generator, so any
operation taking a seed is a pure function of (inputs, seed) and reproducible
across platforms.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    """Return the package-wide PCG64 generator for a non-negative seed."""
    return np.random.default_rng(seed)


def derive_seed(*keys: int) -> int:
    """Derive a child seed from an ordered tuple of non-negative integers.

    Distinct key tuples map to distinct seed streams by construction
    (numpy SeedSequence), which keeps parallel work deterministic.
    """
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])
