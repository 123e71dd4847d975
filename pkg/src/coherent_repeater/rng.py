"""Portable xoshiro256** generator with SplitMix64 seeding.

Reference algorithm by Blackman and Vigna (public domain). Every Monte
Carlo trial ``t`` owns an independent generator whose 256-bit state is the
SplitMix64 outputs ``4t .. 4t+3`` of the user seed, so results do not
depend on how trials are spread over workers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
TWO_POW_M53 = 1.0 / (1 << 53)

JUMP = (0x180EC6D33CFD0ABA, 0xD5A61266F0C9392C, 0xA9582618E03FC9AA, 0x39ABDC4529B1661C)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64_mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_output(seed: int, k: int) -> int:
    """k-th output (0-based) of SplitMix64 started from ``seed``."""
    return splitmix64_mix((seed + (k + 1) * GOLDEN_GAMMA) & MASK64)


def stream_state(seed: int, stream: int) -> tuple:
    return tuple(splitmix64_output(seed & MASK64, 4 * stream + i) for i in range(4))


class Xoshiro256StarStar:
    """Scalar xoshiro256** (reference implementation, 64-bit outputs)."""

    def __init__(self, state):
        state = tuple(int(s) & MASK64 for s in state)
        if len(state) != 4 or not any(state):
            raise ValueError("state must be four 64-bit words, not all zero")
        self.s = list(state)

    @classmethod
    def from_seed(cls, seed: int, stream: int = 0) -> "Xoshiro256StarStar":
        return cls(stream_state(seed, stream))

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * TWO_POW_M53

    def jump(self) -> None:
        """Advance by 2^128 calls (reference jump polynomial)."""
        s0 = s1 = s2 = s3 = 0
        for word in JUMP:
            for b in range(64):
                if word & (1 << b):
                    s0 ^= self.s[0]
                    s1 ^= self.s[1]
                    s2 ^= self.s[2]
                    s3 ^= self.s[3]
                self.next_u64()
        self.s = [s0, s1, s2, s3]

    @property
    def state(self) -> tuple:
        return tuple(self.s)


class LockstepXoshiro:
    """Many independent xoshiro256** streams advanced together with numpy uint64."""

    def __init__(self, seed: int, first_stream: int, count: int):
        states = np.array(
            [stream_state(seed, t) for t in range(first_stream, first_stream + count)], dtype=np.uint64
        ).reshape(count, 4)
        self.s0, self.s1, self.s2, self.s3 = (states[:, i].copy() for i in range(4))

    @staticmethod
    def _rotl(x, k):
        return (x << np.uint64(k)) | (x >> np.uint64(64 - k))

    def next_u64(self) -> np.ndarray:
        result = self._rotl(self.s1 * np.uint64(5), 7) * np.uint64(9)
        t = self.s1 << np.uint64(17)
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = self._rotl(self.s3, 45)
        return result

    def random(self) -> np.ndarray:
        return (self.next_u64() >> np.uint64(11)).astype(np.float64) * TWO_POW_M53
