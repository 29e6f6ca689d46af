"""Counter-based random streams.

Every draw is addressed by ``(seed, chain, phase, sweep)``: the Philox key
holds ``(seed, chain)`` and the counter holds ``(phase, sweep)`` in its upper
words, so any sweep of any chain can be regenerated independently of
scheduling. Within a sweep, row ``p`` of the returned block belongs to
particle ``p``.
"""
import numpy as np

_MASK64 = (1 << 64) - 1

# phase tags, stored in counter word 3
INIT = 1
BURN_IN = 2
MEASURE = 3
INSERT = 4


def stream(seed: int, chain: int, phase: int, sweep: int) -> np.random.Generator:
    key = (int(seed) & _MASK64) | ((int(chain) & _MASK64) << 64)
    counter = ((int(sweep) & _MASK64) << 128) | ((int(phase) & _MASK64) << 192)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def uniform_block(seed: int, chain: int, phase: int, sweep: int, shape) -> np.ndarray:
    return stream(seed, chain, phase, sweep).random(shape)
