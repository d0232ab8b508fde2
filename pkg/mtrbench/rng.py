"""Counter-based random numbers for particle tracking.

Every uniform is a pure function of (stream key, particle index, draw
counter, slot), so a particle's history does not depend on how many other
particles were tracked before it or on which worker tracked it.
The mixer is the splitmix64 finalizer applied twice.
"""

import numpy as np
from numba import njit


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TO_UNIT = 2.0 ** -53

# Draw slots per tracking event: flight, reaction, yield/outgoing group, direction.
SLOTS = np.uint64(4)
SLOT_FLIGHT = np.uint64(0)
SLOT_REACTION = np.uint64(1)
SLOT_BRANCH = np.uint64(2)
SLOT_DIRECTION = np.uint64(3)


@njit(cache=True, nogil=True)
def mix64(z):
    z = np.uint64(z)
    z ^= z >> _S30
    z *= _M1
    z ^= z >> _S27
    z *= _M2
    z ^= z >> _S31
    return z


@njit(cache=True, nogil=True)
def uniform(key, particle, counter, slot):
    """Uniform double in the open interval (0, 1)."""
    x = np.uint64(particle) * _GOLDEN
    x ^= mix64(np.uint64(counter) * SLOTS + np.uint64(slot) + _GOLDEN)
    z = mix64(x ^ np.uint64(key))
    return (np.float64(z >> _S11) + 0.5) * _TO_UNIT


def stream_key(*words: int) -> np.uint64:
    """Derive a 64-bit stream key from integer words (seed, batch, ...)."""
    state = np.random.SeedSequence([int(w) & 0xFFFFFFFFFFFFFFFF for w in words])
    return state.generate_state(1, dtype=np.uint64)[0]


def batch_generator(seed: int, batch: int, purpose: int) -> np.random.Generator:
    """Per-batch generator for work outside particle histories (source sampling)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, batch, purpose])))
