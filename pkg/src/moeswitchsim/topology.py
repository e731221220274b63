"""Transport layer: per-GPU up/down links into one logical switch.

Each link serializes bursts (one packet train per token or per control
message) at the configured bandwidth and keeps two FIFO classes: control
bursts (no data flits) are preferred over bulk bursts at packet boundaries, a
collapsed stand-in for request/response virtual channels. Arrival at the far
end is store-and-forward: transmit completion plus wire latency, plus the
switch pipeline delay for bursts entering the switch.

Links own the accounting: per-category flit counters and, when enabled,
busy-time utilization binned into fixed windows.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

from .codec import FlitCounts, PacketShape
from .config import SystemConfig
from .engine import Simulator, ns_to_ps

UTIL_WINDOW_PS = 1_000_000  # 1 us


@dataclass
class Burst:
    """One packet train on a link; shape is aggregated over its fragments."""

    kind: str
    src: int
    dst: int
    shape: PacketShape
    payload: dict = field(default_factory=dict)

    @property
    def is_ctrl(self) -> bool:
        return self.shape.data == 0


def aggregate_shapes(per_frag: PacketShape, n_full: int, tail: Optional[PacketShape]) -> PacketShape:
    """Whole-token burst shape: n_full equal fragments plus an optional tail."""
    h = per_frag.header * n_full
    t = per_frag.target_ext * n_full
    b = per_frag.byte_enable * n_full
    d = per_frag.data * n_full
    m = per_frag.metadata * n_full
    a = per_frag.ack * n_full
    if tail is not None:
        h += tail.header
        t += tail.target_ext
        b += tail.byte_enable
        d += tail.data
        m += tail.metadata
        a += tail.ack
    return PacketShape(header=h, target_ext=t, byte_enable=b, data=d, metadata=m, ack=a)


class LinkQueue:
    """One direction of one GPU's switch port."""

    def __init__(
        self,
        sim: Simulator,
        name: str,
        flit_ps: float,
        on_depart: Callable[["LinkQueue", Burst], None],
        collect_util: bool = False,
        tx_scale: float = 1.0,
    ):
        self.sim = sim
        self.name = name
        self.flit_ps = flit_ps
        self.tx_scale = tx_scale
        self.on_depart = on_depart
        self.counts = FlitCounts()
        self.busy = False
        self.busy_ps = 0
        self.ctrl: deque = deque()
        self.bulk: deque = deque()
        self.collect_util = collect_util
        self.util_bins: Dict[int, int] = {}
        sim.register(f"txdone:{name}", self._tx_done)

    def enqueue(self, burst: Burst) -> None:
        (self.ctrl if burst.is_ctrl else self.bulk).append(burst)
        if not self.busy:
            self._start_next()

    def queue_depth(self) -> int:
        return len(self.ctrl) + len(self.bulk)

    def _start_next(self) -> None:
        q = self.ctrl if self.ctrl else self.bulk
        if not q:
            return
        burst = q.popleft()
        self.busy = True
        n = burst.shape.total
        tx_ps = max(1, round(n * self.flit_ps * self.tx_scale))
        self.counts.add(burst.shape)
        self.busy_ps += tx_ps
        if self.collect_util:
            self._bin_busy(self.sim.now_ps, self.sim.now_ps + tx_ps)
        self.sim.schedule_in(tx_ps, f"txdone:{self.name}", burst)

    def _bin_busy(self, start: int, end: int) -> None:
        w = start // UTIL_WINDOW_PS
        while start < end:
            edge = (w + 1) * UTIL_WINDOW_PS
            span = min(end, edge) - start
            self.util_bins[w] = self.util_bins.get(w, 0) + span
            start += span
            w += 1

    def _tx_done(self, ev) -> None:
        self.busy = False
        self._start_next()
        self.on_depart(self, ev.payload)


class Fabric:
    """All links of the node plus the logical switch's forwarding delays."""

    def __init__(
        self,
        sim: Simulator,
        system: SystemConfig,
        on_switch_arrive: Callable[[Burst], None],
        on_gpu_arrive: Callable[[Burst], None],
        collect_util: bool = False,
        tx_scale: float = 1.0,
    ):
        self.sim = sim
        self.system = system
        flit_ps = system.flit_bytes * 1000.0 / system.link_bw_gbps
        self.flit_ps = flit_ps
        self.latency_ps = ns_to_ps(system.link_latency_ns)
        self.switch_ps = ns_to_ps(system.switch_latency_ns)
        self.on_switch_arrive = on_switch_arrive
        self.on_gpu_arrive = on_gpu_arrive
        self.up = [
            LinkQueue(sim, f"up{g}", flit_ps, self._up_departed, collect_util, tx_scale)
            for g in range(system.n_gpu)
        ]
        self.down = [
            LinkQueue(sim, f"dn{g}", flit_ps, self._down_departed, collect_util, tx_scale)
            for g in range(system.n_gpu)
        ]
        sim.register("switch_arrive", lambda ev: self.on_switch_arrive(ev.payload))
        sim.register("gpu_arrive", lambda ev: self.on_gpu_arrive(ev.payload))
        self.depart_hooks = []  # callbacks (link, burst) after each tx completes

    def send_up(self, gpu: int, burst: Burst) -> None:
        self.up[gpu].enqueue(burst)

    def send_down(self, gpu: int, burst: Burst) -> None:
        self.down[gpu].enqueue(burst)

    def _up_departed(self, link: LinkQueue, burst: Burst) -> None:
        # store-and-forward into the switch: wire latency + pipeline delay
        self.sim.schedule_in(self.latency_ps + self.switch_ps, "switch_arrive", burst)
        for hook in self.depart_hooks:
            hook(link, burst)

    def _down_departed(self, link: LinkQueue, burst: Burst) -> None:
        self.sim.schedule_in(self.latency_ps, "gpu_arrive", burst)
        for hook in self.depart_hooks:
            hook(link, burst)

    def all_links(self):
        yield from self.up
        yield from self.down

    def busiest_ideal_ps(self) -> float:
        """Serialization time of the most loaded link direction."""
        return max(l.counts.total * self.flit_ps for l in self.all_links())

    def total_counts(self) -> FlitCounts:
        agg = FlitCounts()
        for l in self.all_links():
            agg.merge(l.counts)
        return agg
