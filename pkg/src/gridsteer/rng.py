"""Seeded portable random source for the node simulator.

A 64-bit linear congruential generator (Knuth's MMIX constants). Chosen over
``random.Random`` because the simulated event stream is a documented
deterministic contract: any implementation, in any language, must be able to
reproduce it from the seed alone.

    state' = (state * 6364136223846793005 + 1442695040888963407) mod 2^64
    float  = (state' >> 11) / 2^53        # uniform in [0, 1)
"""

from __future__ import annotations

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state * _MULT + _INC) & _MASK
        return self.state

    def next_float(self) -> float:
        # 53 bits of mantissa, uniform in [0, 1)
        return (self.next_u64() >> 11) / 9007199254740992.0
