"""SplitMix64, the only source of randomness in occlite.

Output k (k = 1, 2, ...) of a generator seeded with s is
`mix(s + k * GAMMA mod 2**64)`, so vectorized draws produce exactly the same
stream as repeated scalar draws on any platform. See `docs/prng.md`.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def _mix_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """A 64-bit SplitMix generator.

    Args:
        seed: Any integer; it is reduced modulo 2**64.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & MASK64
        self.state = self.seed

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return _mix_int(self.state)

    def u64_array(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        states = np.uint64(self.state) + steps * np.uint64(GAMMA)
        self.state = (self.state + n * GAMMA) & MASK64
        return _mix_array(states)

    def random(self, size: int | tuple[int, ...] | None = None):
        """Uniform floats in [0, 1) built from the top 53 bits."""
        if size is None:
            return (self.next_u64() >> 11) * 2.0**-53
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        bits = self.u64_array(count) >> np.uint64(11)
        return (bits.astype(np.float64) * 2.0**-53).reshape(shape)

    def uniform(
        self,
        low: float = 0.0,
        high: float = 1.0,
        size: int | tuple[int, ...] | None = None,
    ):
        return low + (high - low) * self.random(size)

    def integers(self, low: int, high: int) -> int:
        """A single integer in [low, high)."""
        if high <= low:
            raise ValueError(f"Empty integer range [{low}, {high})")
        return low + self.next_u64() % (high - low)

    def normal(
        self, size: int | tuple[int, ...], scale: float = 1.0
    ) -> np.ndarray:
        """Standard normal draws by the cosine branch of Box-Muller, two
        uniforms per value.
        """
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        draws = self.random(2 * count)
        radius = np.sqrt(-2.0 * np.log(1.0 - draws[0::2]))
        return scale * (radius * np.cos(2.0 * np.pi * draws[1::2])).reshape(
            shape
        )

    def spawn(self) -> SplitMix64:
        """An independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())
