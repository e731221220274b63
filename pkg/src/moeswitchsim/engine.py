"""Deterministic discrete-event core: virtual clock, event queue, named RNG streams.

Time is kept as integer picoseconds so that event ordering never depends on
float rounding; reports convert to nanoseconds at the edge.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

PS_PER_NS = 1000

# default cap on processed events before a run is declared runaway
DEFAULT_MAX_EVENTS = 50_000_000


def ns_to_ps(ns: float) -> int:
    return int(round(ns * PS_PER_NS))


def ps_to_ns(ps: int) -> float:
    return ps / PS_PER_NS


class SimError(RuntimeError):
    """Base class for simulation failures."""


class ScheduleInPastError(SimError):
    pass


class RunawayError(SimError):
    pass


class ProtocolError(SimError):
    """An in-simulation protocol invariant was violated."""


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def stable_hash64(text: str) -> int:
    """Platform-stable 64-bit hash of a string (python's hash() is salted)."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return _splitmix64(h)


class RngStreams:
    """Named, independently seeded counter-based generators.

    Each stream is a Philox generator keyed by (seed, stable hash of name), so
    draws from one stream never perturb another and results are identical
    across platforms and run orders.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            key = (self.seed << 64) ^ stable_hash64(name)
            gen = np.random.Generator(np.random.Philox(key=key))
            self._streams[name] = gen
        return gen


@dataclass
class Event:
    time_ps: int
    seq: int
    kind: str
    payload: Any = None
    cancelled: bool = False


class Simulator:
    """Single-threaded event loop with a (time, seq) total order.

    Handlers are registered per event kind; ties at equal timestamps fire in
    schedule order, which together with seeded RNG streams makes runs
    bit-identical for a given config+seed.
    """

    def __init__(self, max_events: int = DEFAULT_MAX_EVENTS):
        self.now_ps: int = 0
        self.max_events = int(max_events)
        self.events_processed: int = 0
        self._heap: List[tuple] = []
        self._seq = 0
        self._handlers: Dict[str, Callable[[Event], None]] = {}

    def register(self, kind: str, handler: Callable[[Event], None]) -> None:
        self._handlers[kind] = handler

    def schedule_at(self, time_ps: int, kind: str, payload: Any = None) -> Event:
        time_ps = int(time_ps)
        if time_ps < self.now_ps:
            raise ScheduleInPastError(
                f"schedule at t={time_ps}ps before now={self.now_ps}ps ({kind})"
            )
        ev = Event(time_ps, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, (time_ps, ev.seq, ev))
        return ev

    def schedule_in(self, delay_ps: int, kind: str, payload: Any = None) -> Event:
        if delay_ps < 0:
            raise ScheduleInPastError(f"negative delay {delay_ps}ps ({kind})")
        return self.schedule_at(self.now_ps + int(delay_ps), kind, payload)

    @staticmethod
    def cancel(ev: Event) -> None:
        ev.cancelled = True

    def run_until_idle(self) -> int:
        """Drain the queue; returns the clock (ps) after the last event."""
        while self._heap:
            time_ps, _, ev = heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self.now_ps = time_ps
            self.events_processed += 1
            if self.events_processed > self.max_events:
                raise RunawayError(
                    f"event cap exceeded ({self.max_events}); "
                    f"likely a runaway feedback loop at t={self.now_ps}ps"
                )
            handler = self._handlers.get(ev.kind)
            if handler is None:
                raise SimError(f"no handler for event kind {ev.kind!r}")
            handler(ev)
        return self.now_ps
