"""Injectable millisecond clocks so reports can be normalized in tests."""

from __future__ import annotations

import time


class SystemClock:
    def now_ms(self) -> float:
        return time.time() * 1000.0


class FixedClock:
    """Starts at ``start`` and advances ``step`` milliseconds per reading."""

    def __init__(self, start: float = 0.0, step: float = 1.0):
        self.t = start
        self.step = step

    def now_ms(self) -> float:
        value = self.t
        self.t += self.step
        return value
