"""Clocks the broker can run against.

Sim time is epoch seconds (UTC). A virtual clock moves only when told to,
which makes whole-experiment runs and tests instantaneous and exactly
reproducible. A real clock maps wall time onto sim time at a configurable
speed (sim-seconds per wall-second).
"""

from __future__ import annotations

import time


class VirtualClock:
    def __init__(self, start: float):
        self.start = start
        self._now = start

    def now(self) -> float:
        return self._now

    def advance_to(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"virtual clock cannot rewind from {self._now} to {t}")
        self._now = t


class RealClock:
    def __init__(self, start: float, speed: float = 1.0):
        if speed <= 0:
            raise ValueError("clock speed must be positive")
        self.start = start
        self.speed = speed
        self._anchor = time.monotonic()

    def now(self) -> float:
        return self.start + (time.monotonic() - self._anchor) * self.speed
