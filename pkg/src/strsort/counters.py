"""Instrumentation counters shared by sorters, scheduler, and harness."""

from __future__ import annotations

import threading


class Counters:
    """Thread-safe named counters (cache fills, jobs, shares, queue length...).

    Increments go through one lock; call sites are per-step, not
    per-element, so contention is negligible.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._values: dict[str, int] = {}

    def add(self, name: str, amount: int = 1) -> None:
        with self._lock:
            self._values[name] = self._values.get(name, 0) + amount

    def record_max(self, name: str, value: int) -> None:
        with self._lock:
            if value > self._values.get(name, 0):
                self._values[name] = value

    def get(self, name: str) -> int:
        with self._lock:
            return self._values.get(name, 0)

    def as_dict(self) -> dict[str, int]:
        with self._lock:
            return dict(self._values)

    def __repr__(self):
        return f"Counters({self.as_dict()})"
