import math
import numpy as np


MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-trial / per-epoch seed: one SplitMix64 output of (seed xor index)."""
    return SplitMix64((seed ^ index) & MASK64).next_u64()


class SplitMix64:
    """SplitMix64 stream seeded directly by a u64.

    The scalar path (`next_u64`) and the vectorised block path (`uniforms`,
    `normals`) consume the same stream, so mixing them is deterministic.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return _mix(self.state)

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def randbelow(self, k: int) -> int:
        """Uniform integer in [0, k) by rejection on the high bits."""
        if k <= 0:
            raise ValueError("k must be positive")
        if k == 1:
            self.next_u64()
            return 0
        bits = (k - 1).bit_length()
        while True:
            x = self.next_u64() >> (64 - bits)
            if x < k:
                return x

    def next_normal(self) -> float:
        u1 = 1.0 - self.next_double()
        u2 = self.next_double()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def _raw_block(self, count: int) -> np.ndarray:
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + count * GAMMA) & MASK64
        return z

    def uniforms(self, count: int) -> np.ndarray:
        """`count` doubles in [0, 1), bitwise equal to repeated `next_double`."""
        if count <= 0:
            return np.zeros(0)
        return (self._raw_block(count) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normals(self, count: int) -> np.ndarray:
        """`count` standard normals, Box-Muller (cosine branch) on consecutive pairs."""
        if count <= 0:
            return np.zeros(0)
        u = self.uniforms(2 * count).reshape(count, 2)
        u1 = 1.0 - u[:, 0]
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u[:, 1])

    def permutation(self, k: int) -> np.ndarray:
        """Fisher-Yates permutation of range(k)."""
        perm = np.arange(k)
        for i in range(k - 1, 0, -1):
            j = self.randbelow(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
