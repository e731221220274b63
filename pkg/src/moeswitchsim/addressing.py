"""Address-list management on the hub path.

A dynamic-multicast store names its row by (expert region, global token id);
the receiving hub translates that to the expert's local buffer slot. Slots
are handed out densely in arrival order, so translation is a per-expert
mapping token -> lidx built on first touch; the hub caches translations in a
small LRU (the address-list TLB). One token burst touches one tag per target
expert, with all of the burst's fragments walking the same tag back to back:
the first access probes the TLB, the remaining fragment accesses always hit.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .engine import ProtocolError

# multimem address layout: expert region base, row stride, fragment stride
REGION_SHIFT = 34


def mbase(expert: int, stage: int, n_experts: int) -> int:
    return (stage * n_experts + expert) << REGION_SHIFT


def maddr(expert: int, stage: int, n_experts: int, token: int, token_bytes: int, frag: int, granularity: int) -> int:
    return mbase(expert, stage, n_experts) + token * token_bytes + frag * granularity


def vaddr(vbase: int, lidx: int, token_bytes: int, offset: int = 0) -> int:
    return vbase + lidx * token_bytes + offset


@dataclass
class AlManager:
    """Per-GPU dense slot allocator: (expert, token) -> lidx, arrival order."""

    next_lidx: Dict[int, int] = field(default_factory=dict)
    table: Dict[Tuple[int, int], int] = field(default_factory=dict)

    def assign(self, expert: int, token: int) -> int:
        key = (expert, token)
        lidx = self.table.get(key)
        if lidx is not None:
            return lidx
        lidx = self.next_lidx.get(expert, 0)
        self.next_lidx[expert] = lidx + 1
        self.table[key] = lidx
        return lidx

    def lookup(self, expert: int, token: int) -> int:
        key = (expert, token)
        if key not in self.table:
            raise ProtocolError(f"address list has no entry for expert {expert}, token {token}")
        return self.table[key]

    def count(self, expert: int) -> int:
        return self.next_lidx.get(expert, 0)

    def check_bijective(self) -> None:
        """Every expert's assigned slots must form a dense 0..n-1 permutation."""
        seen: Dict[int, set] = {}
        for (e, _t), lidx in self.table.items():
            seen.setdefault(e, set()).add(lidx)
        for e, slots in seen.items():
            n = self.next_lidx[e]
            if slots != set(range(n)):
                raise ProtocolError(f"expert {e}: slot ids not dense/bijective")


class AlTlb:
    """LRU translation cache over (expert, token) tags with run accounting.

    access() models one token burst's run of fragment accesses against a
    single tag: the probe hits or misses, the remaining run_len-1 accesses
    hit by construction. Returns the miss penalty in picoseconds.
    """

    def __init__(self, entries: int, miss_penalty_ps: int):
        self.entries = entries
        self.miss_penalty_ps = miss_penalty_ps
        self._lru: OrderedDict = OrderedDict()
        self.hits = 0
        self.misses = 0
        self.probe_trace: List[int] = []
        self.trace_enabled = False

    def access(self, tag: Tuple[int, int], run_len: int) -> int:
        if self.trace_enabled:
            self.probe_trace.append(tag[0] << 32 | tag[1])
        penalty = 0
        if tag in self._lru:
            self._lru.move_to_end(tag)
            self.hits += 1
        else:
            self.misses += 1
            penalty = self.miss_penalty_ps
            if len(self._lru) >= self.entries:
                self._lru.popitem(last=False)
            self._lru[tag] = True
        self.hits += run_len - 1
        return penalty

    @property
    def accesses(self) -> int:
        return self.hits + self.misses

    @property
    def hit_rate(self) -> float:
        total = self.accesses
        return self.hits / total if total else 0.0
