"""
Reproducible random streams.

Every replication owns a ``numpy.random.Generator`` backed by PCG64 and seeded
from ``SeedSequence(master_seed, spawn_key=(domain, index))``. The seed
sequence hash mixes master seed and index, so the stream of replication ``i``
does not depend on how replications are distributed over workers.
"""

import numpy as np

EXPERIMENT_DOMAIN = 0
PICKANDS_DOMAIN = 1

MAX_SEED = 2**64 - 1


def derive_stream(master_seed, index, domain=EXPERIMENT_DOMAIN):
    if not 0 <= master_seed <= MAX_SEED:
        raise ValueError("master_seed must be a 64-bit unsigned integer")
    if index < 0:
        raise ValueError("replication index must be nonnegative")
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(domain, index))
    return np.random.Generator(np.random.PCG64(seq))


def derive_streams(master_seed, start, stop, domain=EXPERIMENT_DOMAIN):
    return [derive_stream(master_seed, i, domain=domain) for i in range(start, stop)]


def chunk_ranges(total, chunk_size):
    """Split ``range(total)`` into consecutive ``(start, stop)`` pairs."""
    chunk_size = max(1, int(chunk_size))
    return [
        (start, min(start + chunk_size, total))
        for start in range(0, total, chunk_size)
    ]
