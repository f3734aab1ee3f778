"""Counter-based 64-bit generator (splitmix64) shared by both kernel backends.

The compiled kernels reimplement exactly these functions so that the two
backends consume identical random streams.
"""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


def fmix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * _C1) & MASK64
    z = ((z ^ (z >> 27)) * _C2) & MASK64
    return z ^ (z >> 31)


def derive(key, x):
    """Combine a key with an integer counter into a new 64-bit key."""
    return fmix64(((key & MASK64) ^ fmix64((x + GOLDEN) & MASK64)) + GOLDEN)


def derive_seed(seed, *parts):
    key = seed & MASK64
    for p in parts:
        key = derive(key, p)
    return key


class SplitMix64:
    """Sequential stream over ``fmix64(key + i * GOLDEN)``."""

    __slots__ = ("state",)

    def __init__(self, key):
        self.state = key & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        return fmix64(self.state)

    def uniform(self):
        return (self.next_u64() >> 11) * _INV53

    def below(self, n):
        return self.next_u64() % n
