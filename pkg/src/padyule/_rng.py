"""Counter-based random streams keyed by (seed, stream, index).

Every trajectory draws from its own Philox generator whose key is derived
from the user seed, a stream tag and the trajectory index, so results do
not depend on how trajectories are scheduled across workers.
"""

import numpy as np

from .errors import DomainError

# Stream tags.  Graph and household simulations never share a stream, which
# keeps the two sides of the embedding comparison independent.
GRAPH_STREAM = 0
YULE_STREAM = 1
SAMPLING_STREAM = 2

CHUNK_STEPS = 1 << 18


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise DomainError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


def stream_generator(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=(stream, int(index)))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(check_seed(rng))
