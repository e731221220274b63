"""Token-centric completion tracking on each GPU.

TileTracker is the tile-status table: per (expert, tile) row-arrival counts
against a precomputed active-token total, so a tile's first GEMM can launch
the moment its rows are dense. ORTracker is the source-side outstanding-row
table: per-token readiness counts fed by completion notifications; a token
becomes combinable when all topk of its expert rows are done. Both tables
have a fixed entry budget; running past it costs a spill penalty per touch
(the overflow entries live in device memory), never a loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .engine import ProtocolError


@dataclass
class TileReady:
    expert: int
    tile: int
    rows: int
    tokens: List[int]


class TileTracker:
    """Row-accumulation table for one GPU's experts."""

    def __init__(self, experts: List[int], counts: Dict[int, int], tile_tokens: int, entries: int):
        self.tile_tokens = tile_tokens
        self.entries = entries
        self.counts = {e: counts.get(e, 0) for e in experts}
        self.n_tiles = {e: -(-c // tile_tokens) if c else 0 for e, c in self.counts.items()}
        self._rows: Dict[Tuple[int, int], int] = {}
        self._tokens: Dict[Tuple[int, int], List[int]] = {}
        self.spills = 0
        self.active_peak = 0

    def tile_rows(self, expert: int, tile: int) -> int:
        """Active rows of this tile (the last tile may be short)."""
        c = self.counts[expert]
        if tile < c // self.tile_tokens:
            return self.tile_tokens
        rem = c - tile * self.tile_tokens
        if rem <= 0 or rem > self.tile_tokens:
            raise ProtocolError(f"tile ({expert},{tile}) out of range for {c} rows")
        return rem

    def row_delivered(self, expert: int, lidx: int, token: int) -> Optional[TileReady]:
        """Record one dense row; returns the tile when it becomes full."""
        tile = lidx // self.tile_tokens
        key = (expert, tile)
        if key not in self._rows:
            self._rows[key] = 0
            self._tokens[key] = []
            active = len(self._rows)
            self.active_peak = max(self.active_peak, active)
            if active > self.entries:
                self.spills += 1
        self._rows[key] += 1
        self._tokens[key].append(token)
        need = self.tile_rows(expert, tile)
        if self._rows[key] == need:
            tokens = self._tokens.pop(key)
            del self._rows[key]
            return TileReady(expert, tile, need, tokens)
        return None

    def assert_drained(self) -> None:
        if self._rows:
            raise ProtocolError(f"{len(self._rows)} tiles never filled")


class ORTracker:
    """Per-source-token readiness counts driven by notifications."""

    def __init__(self, topk: int, entries: int):
        self.topk = topk
        self.entries = entries
        self._ready: Dict[int, int] = {}
        self.spills = 0
        self.active_peak = 0
        self.completed = 0

    def inc(self, token: int) -> bool:
        """Count one expert-row completion; True when the token is combinable."""
        if token not in self._ready:
            self._ready[token] = 0
            self.active_peak = max(self.active_peak, len(self._ready))
            if len(self._ready) > self.entries:
                self.spills += 1
        self._ready[token] += 1
        if self._ready[token] > self.topk:
            raise ProtocolError(f"token {token}: more notifications than topk")
        if self._ready[token] == self.topk:
            del self._ready[token]
            self.completed += 1
            return True
        return False

    def assert_drained(self) -> None:
        if self._ready:
            raise ProtocolError(f"{len(self._ready)} tokens never became ready")


def expert_token_counts(experts: np.ndarray, n_experts: int) -> Dict[int, int]:
    counts = np.bincount(experts.ravel(), minlength=n_experts)
    return {e: int(c) for e, c in enumerate(counts)}
