"""In-switch reduction state: per-source-port accumulator partitions.

Each source port owns a fixed partition of the reduction buffer. A slot is a
one-token accumulator, reserved when the token's first partial reaches the
switch and released when the folded response departs. When a new token needs
space in a full partition the oldest open slot is evicted: its partial
accumulation is flushed down to the source immediately and the token is
tombstoned, after which its late partials are forwarded down individually
instead of re-admitted. The source completes the fold locally, so eviction
costs bandwidth and latency but never correctness: every partial decrements
the token's outstanding count exactly once, slot or no slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .engine import ProtocolError

MASK64 = (1 << 64) - 1


@dataclass
class Slot:
    token: int
    expected: int
    slot_bytes: int
    acc: int = 0
    folded: int = 0
    opened_seq: int = 0


@dataclass
class Action:
    """What the fabric must do after a partial is absorbed."""

    kind: str  # 'complete' | 'evict_flush' | 'forward'
    token: int
    value: int = 0
    folded: int = 0


class PortReductionBuffer:
    """One source port's accumulator partition."""

    def __init__(self, capacity_bytes: int, slot_bytes: int):
        if slot_bytes > capacity_bytes:
            raise ProtocolError("reduction slot larger than its partition")
        self.capacity = capacity_bytes
        self.slot_bytes = slot_bytes
        self.slots: Dict[int, Slot] = {}
        self.order: List[int] = []  # open order, oldest first
        self.tombstones: Dict[int, int] = {}  # token -> partials still due
        self._seq = 0
        self.opened = 0
        self.completed = 0
        self.evictions = 0
        self.forwards = 0
        self.peak_open = 0

    @property
    def used_bytes(self) -> int:
        return len(self.slots) * self.slot_bytes

    def deliver(self, token: int, value: int, expected: int) -> List[Action]:
        """Fold one partial for token; returns fabric actions in order."""
        out: List[Action] = []
        due = self.tombstones.get(token)
        if due is not None:
            # evicted earlier: bypass the buffer, forward down as-is
            if due <= 0:
                raise ProtocolError(f"token {token}: partial after tombstone drained")
            self.tombstones[token] = due - 1
            if due - 1 == 0:
                del self.tombstones[token]
            self.forwards += 1
            out.append(Action("forward", token, value=value, folded=1))
            return out

        slot = self.slots.get(token)
        if slot is None:
            while self.used_bytes + self.slot_bytes > self.capacity:
                out.append(self._evict_oldest())
            slot = Slot(token, expected, self.slot_bytes, opened_seq=self._seq)
            self._seq += 1
            self.slots[token] = slot
            self.order.append(token)
            self.opened += 1
            self.peak_open = max(self.peak_open, len(self.slots))

        slot.acc = (slot.acc + value) & MASK64
        slot.folded += 1
        if slot.folded > slot.expected:
            raise ProtocolError(f"token {token}: more partials than expected")
        if slot.folded == slot.expected:
            self._close(token)
            self.completed += 1
            out.append(Action("complete", token, value=slot.acc, folded=slot.folded))
        return out

    def _evict_oldest(self) -> Action:
        if not self.order:
            raise ProtocolError("reduction partition full with nothing to evict")
        victim_tok = self.order[0]
        victim = self.slots[victim_tok]
        self._close(victim_tok)
        remaining = victim.expected - victim.folded
        if remaining > 0:
            self.tombstones[victim_tok] = remaining
        self.evictions += 1
        return Action("evict_flush", victim_tok, value=victim.acc, folded=victim.folded)

    def _close(self, token: int) -> None:
        del self.slots[token]
        self.order.remove(token)


class SwitchReduction:
    """Per-source-port partitions, created on first use."""

    def __init__(self, partition_bytes: int, slot_bytes: int):
        self.partition_bytes = partition_bytes
        self.slot_bytes = slot_bytes
        self.ports: Dict[int, PortReductionBuffer] = {}

    def port(self, src: int) -> PortReductionBuffer:
        buf = self.ports.get(src)
        if buf is None:
            buf = PortReductionBuffer(self.partition_bytes, self.slot_bytes)
            self.ports[src] = buf
        return buf

    def deliver(self, src: int, token: int, value: int, expected: int) -> List[Action]:
        return self.port(src).deliver(token, value, expected)

    def stats(self) -> Tuple[int, int, int, int, int]:
        opened = completed = evictions = forwards = peak = 0
        for buf in self.ports.values():
            opened += buf.opened
            completed += buf.completed
            evictions += buf.evictions
            forwards += buf.forwards
            peak = max(peak, buf.peak_open)
        return opened, completed, evictions, forwards, peak

    def assert_drained(self) -> None:
        for src, buf in self.ports.items():
            if buf.slots or buf.tombstones:
                raise ProtocolError(
                    f"port {src}: reduction state not drained "
                    f"({len(buf.slots)} slots, {len(buf.tombstones)} tombstones)"
                )


def fold_values(values) -> int:
    acc = 0
    for v in values:
        acc = (acc + v) & MASK64
    return acc
