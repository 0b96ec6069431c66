"""Portable seeded random streams: xoshiro256** seeded through splitmix64.

Stream ``i`` of seed ``s`` is initialised by running splitmix64 from the
64-bit state ``(s + i) mod 2**64`` and taking its first four outputs as the
xoshiro256** state. A uniform double is ``(next() >> 11) * 2**-53`` in
``[0, 1)``. Both algorithms are the public-domain reference versions by
Blackman and Vigna, so the streams can be reproduced in any language.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(state):
    """Return ``(output, new_state)`` for one splitmix64 step (Python ints)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Xoshiro256:
    """``n_streams`` independent xoshiro256** generators advanced in lockstep.

    Parameters
    ----------
    seed : int
        64-bit seed.
    n_streams : int
        Number of streams; stream ``i`` uses seed ``seed + i``.
    first_stream : int
        Index of the first stream, so a single unit's stream can be rebuilt
        on its own.
    """

    def __init__(self, seed, n_streams=1, first_stream=0):
        rows = []
        for i in range(first_stream, first_stream + n_streams):
            s = (int(seed) + i) & _MASK
            words = []
            for _ in range(4):
                out, s = splitmix64(s)
                words.append(out)
            rows.append(words)
        self.state = np.array(rows, dtype=np.uint64).reshape(n_streams, 4)
        self.n_streams = n_streams

    def next_u64(self, mask=None):
        """Advance the streams selected by boolean ``mask`` (all by default)."""
        s = self.state if mask is None else self.state[mask]
        with np.errstate(over="ignore"):
            result = _rotl(s[:, 1] * np.uint64(5), 7) * np.uint64(9)
        t = s[:, 1] << np.uint64(17)
        s2 = s[:, 2] ^ s[:, 0]
        s3 = s[:, 3] ^ s[:, 1]
        s1 = s[:, 1] ^ s2
        s0 = s[:, 0] ^ s3
        s2 = s2 ^ t
        s3 = _rotl(s3, 45)
        new = np.stack([s0, s1, s2, s3], axis=1)
        if mask is None:
            self.state = new
        else:
            self.state[mask] = new
        return result

    def uniform(self, mask=None):
        """Doubles in ``[0, 1)`` for the selected streams."""
        return (self.next_u64(mask) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def random(self, size=None):
        """Scalar interface on stream 0 (matches ``numpy.random.Generator.random``)."""
        if size is None:
            if self.n_streams != 1:
                raise ValueError("scalar draws need a single-stream generator")
            return float(self.uniform()[0])
        n = int(np.prod(size))
        if self.n_streams != 1:
            raise ValueError("sized draws need a single-stream generator")
        return np.array([self.uniform()[0] for _ in range(n)]).reshape(size)
