"""Reproducible random streams shared by the Python and compiled engines.

A ``RandomSource`` is a (seed, stream_id) pair driving an xoshiro256++
generator.  The identical algorithm is compiled in ``_kernels``; both
sides mutate the same uint64[4] state array, so a trajectory started in
Python can be continued inside the compiled engine (and vice versa) with
bit-identical results.  Distinct stream ids are decorrelated through a
splitmix64 scrambling of the seed.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_MULT = 0xA3EC647659359ACD


def parse_seed(text):
    """Parse a seed given as a decimal or 0x-prefixed hex string."""
    if isinstance(text, (int, np.integer)):
        return int(text) & _MASK
    s = str(text).strip()
    base = 16 if s.lower().startswith("0x") else 10
    return int(s, base) & _MASK


def _splitmix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def initial_state(seed, stream_id):
    """xoshiro256++ state vector for a (seed, stream_id) pair."""
    z = (int(seed) ^ ((int(stream_id) * _STREAM_MULT) & _MASK)) & _MASK
    s = np.empty(4, dtype=np.uint64)
    acc = z
    for i in range(4):
        acc = (acc + _GOLDEN) & _MASK
        s[i] = _splitmix64(acc)
    return s


class RandomSource:
    """Deterministic random stream identified by (seed, stream_id).

    Identical (seed, stream_id) pairs yield bit-identical draw sequences;
    distinct stream ids give statistically independent streams.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = parse_seed(seed)
        self.stream_id = int(stream_id)
        self.state = initial_state(self.seed, self.stream_id)

    def spawn(self, stream_id):
        """Fresh source with the same seed and another stream id."""
        return RandomSource(self.seed, stream_id)

    def next_u64(self):
        s = self.state
        s0, s1, s2, s3 = (int(s[0]), int(s[1]), int(s[2]), int(s[3]))
        result = (_rotl((s0 + s3) & _MASK, 23) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        s[0], s[1], s[2], s[3] = s0, s1, s2, s3
        return result

    def uniform(self):
        """Uniform draw in (0, 1] (never 0, safe under log)."""
        return ((self.next_u64() >> 11) + 1) * (1.0 / 9007199254740992.0)

    def exponential(self, rate):
        """Exponential waiting time with the given rate."""
        return -np.log(self.uniform()) / rate


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK
