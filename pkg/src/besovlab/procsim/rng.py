"""Counter-based random sub-streams keyed by (seed, replicate, coordinate)."""

import numpy as np

from ..errors import ValidationError

_U64 = 2**64


def check_seed(seed) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) < _U64:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def substream(seed: int, replicate: int, coordinate: int = 0) -> np.random.Generator:
    """Independent Philox generator for one replicate/coordinate.

    The stream depends only on the triple, so replicates can be generated in
    any order or in parallel with identical results.
    """
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(int(replicate), int(coordinate)))
    return np.random.Generator(np.random.Philox(ss))
