"""Deterministic 64-bit RNG primitives shared by both engine backends.

xoshiro256** drives the event loop; splitmix64 expands seeds and derives
independent per-replica streams by counter splitting.  The compiled engine
re-implements exactly the same arithmetic, so trajectories are bit-identical
across backends for a given seed.
"""

from __future__ import annotations

__all__ = ["splitmix64", "seed_state", "derive_seed", "Xoshiro256"]

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def seed_state(seed: int) -> tuple[int, int, int, int]:
    """Expand a 64-bit seed into a full xoshiro256 state (never all-zero)."""
    st = seed & _MASK
    out = []
    for _ in range(4):
        st, z = splitmix64(st)
        out.append(z)
    if not any(out):
        out[0] = _GOLDEN
    return tuple(out)


def derive_seed(master: int, *indices: int) -> int:
    """Counter-split sub-seed: replica/purpose indices fold in one at a time.

    derive_seed(master, k) is the chain seed of replica k; a second index
    separates independent purposes (e.g. initial-condition sampling).
    """
    s = master & _MASK
    for ix in indices:
        s = (s + (ix + 1) * _GOLDEN) & _MASK
        _, s = splitmix64(s)
    return s


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256:
    """xoshiro256** generator; pure-Python twin of the compiled one."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        self.s0, self.s1, self.s2, self.s3 = seed_state(seed)

    def next_u64(self) -> int:
        result = (_rotl((self.s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (self.s1 << 17) & _MASK
        self.s2 ^= self.s0
        self.s3 ^= self.s1
        self.s1 ^= self.s2
        self.s0 ^= self.s3
        self.s2 ^= t
        self.s3 = _rotl(self.s3, 45)
        return result

    def next_double(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def next_index(self, n: int) -> int:
        """Uniform index in 0..n-1 (negligible truncation bias for n << 2^53)."""
        return int(self.next_double() * n)
