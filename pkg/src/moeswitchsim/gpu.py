"""GPU-side resources: issue pacing semaphores, the GEMM server, and hub
state (address list plus its TLB).

Pacing is credit-based. The multimem queue caps outstanding multicast store
operations (one per payload granule) across a GPU's dispatch warps; the
combine window caps outstanding pulled accumulator bytes per source; unicast
paths use a plain burst-count injection window. Credits release when the
modeled resource frees (injection end for store ops, token completion for
window bytes), and blocked issue loops re-kick FIFO.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Optional

from .addressing import AlManager, AlTlb
from .engine import Simulator


class CreditGate:
    """FIFO credit semaphore; a blocked acquire parks a resume callback."""

    def __init__(self, capacity: int, name: str = ""):
        self.capacity = capacity
        self.name = name
        self.used = 0
        self._waiters: deque = deque()
        self.stalls = 0

    @property
    def available(self) -> int:
        return self.capacity - self.used

    def try_acquire(self, n: int, on_ready: Optional[Callable[[], None]] = None) -> bool:
        """Take n credits now, or park on_ready for when they free up.

        Head-of-line order: if anyone is already waiting, new acquires queue
        behind them even when credits happen to be free.
        """
        if n > self.capacity:
            raise ValueError(f"{self.name}: request {n} exceeds capacity {self.capacity}")
        if not self._waiters and n <= self.available:
            self.used += n
            return True
        self.stalls += 1
        if on_ready is not None:
            self._waiters.append((n, on_ready))
        return False

    def release(self, n: int) -> None:
        self.used -= n
        if self.used < 0:
            raise ValueError(f"{self.name}: credit release underflow")
        while self._waiters and self._waiters[0][0] <= self.available:
            need, cb = self._waiters.popleft()
            self.used += need
            cb()


class MultimemQ(CreditGate):
    """Outstanding multicast store granules (aggregated per-warp queues)."""

    def __init__(self, entries_per_sm: int, n_sms: int):
        super().__init__(entries_per_sm * n_sms, name="multimemq")


class GemmServer:
    """Single FIFO GEMM engine per GPU at a fixed effective rate.

    Duration of a job is flops / rate_tflops picoseconds (teraflops cancel
    against picoseconds per second).
    """

    def __init__(self, sim: Simulator, gpu: int, rate_tflops: float):
        self.sim = sim
        self.gpu = gpu
        self.rate_tflops = rate_tflops
        self._queue: deque = deque()
        self._prio: deque = deque()
        self._busy = False
        self.busy_ps = 0
        self.jobs_done = 0
        self.first_start_ps: Optional[int] = None
        self.last_done_ps = 0
        sim.register(f"gemm:{gpu}", self._done)

    def push(self, flops: float, on_done: Callable[[], None], prio: bool = False) -> None:
        # prio jobs (second-stage tiles) run before any queued first-stage
        # work: finishing in-flight tiles bounds token readiness latency.
        (self._prio if prio else self._queue).append((flops, on_done))
        if not self._busy:
            self._start_next()

    def _start_next(self) -> None:
        if not self._prio and not self._queue:
            return
        flops, on_done = (self._prio or self._queue).popleft()
        self._busy = True
        dur = max(1, round(flops / self.rate_tflops))
        self.busy_ps += dur
        if self.first_start_ps is None:
            self.first_start_ps = self.sim.now_ps
        self.sim.schedule_in(dur, f"gemm:{self.gpu}", on_done)

    def _done(self, ev) -> None:
        self._busy = False
        self.jobs_done += 1
        self.last_done_ps = self.sim.now_ps
        cb = ev.payload
        self._start_next()
        cb()


class Hub:
    """Per-GPU ingress: address list, its TLB, and service bookkeeping."""

    def __init__(self, entries: int, miss_penalty_ps: int, trace: bool = False):
        self.al = AlManager()
        self.tlb = AlTlb(entries, miss_penalty_ps)
        self.tlb.trace_enabled = trace
        self.rows_written = 0

    def translate_run(self, expert: int, token: int, run_len: int) -> int:
        """TLB-checked translation for one token burst against one expert."""
        return self.tlb.access((expert, token), run_len)
