"""Hot numeric kernels with a compiled fast path and a pure-numpy fallback.

The compiled path uses numba when it is importable and the environment
variable MOESWITCHSIM_NO_NUMBA is unset. Both paths implement the same
algorithms with the same tie-breaking, so results are bit-identical; the
selection is tested, not assumed. `IMPLS` exposes both for direct comparison.
"""

from __future__ import annotations

import os
from typing import Tuple

import numpy as np

_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def _py_splitmix64_arr(z: np.ndarray) -> np.ndarray:
    z = (z + _GAMMA).astype(np.uint64)
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


def _py_mix64(tokens: np.ndarray, experts: np.ndarray, salt: int) -> np.ndarray:
    """Per-(token, expert) 64-bit checksum words."""
    t = tokens.astype(np.uint64)
    e = experts.astype(np.uint64)
    z = (t + np.uint64(1)) * _C1 ^ (e + np.uint64(1)) * _C2 ^ np.uint64(salt)
    return _py_splitmix64_arr(_py_splitmix64_arr(z))


def _py_fold_u64(vals: np.ndarray) -> int:
    """Wraparound modular sum; the fold is exact, order-independent."""
    acc = 0
    for v in vals.astype(np.uint64):
        acc = (acc + int(v)) & 0xFFFFFFFFFFFFFFFF
    return acc


def _py_topk_select(keys: np.ndarray, k: int) -> np.ndarray:
    """Row-wise top-k indices by descending key, ties to the lowest index."""
    order = np.argsort(-keys, axis=1, kind="stable")
    return order[:, :k].astype(np.int32)


def _py_lru_replay(tags: np.ndarray, capacity: int) -> Tuple[int, int]:
    """Replay an access trace through an LRU table; returns (hits, misses)."""
    clock = 0
    hits = misses = 0
    stamps: dict = {}
    for tag in tags:
        t = int(tag)
        clock += 1
        if t in stamps:
            hits += 1
            stamps[t] = clock
        else:
            misses += 1
            if len(stamps) >= capacity:
                victim = min(stamps, key=stamps.get)
                del stamps[victim]
            stamps[t] = clock
    return hits, misses


_PY_IMPL = {
    "splitmix64_arr": _py_splitmix64_arr,
    "mix64": _py_mix64,
    "fold_u64": _py_fold_u64,
    "topk_select": _py_topk_select,
    "lru_replay": _py_lru_replay,
}

_want_numba = os.environ.get("MOESWITCHSIM_NO_NUMBA", "") != "1"
HAVE_NUMBA = False
_NB_IMPL = {}

if _want_numba:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_splitmix_scalar(z):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def _nb_splitmix64_arr(z):
        out = np.empty(z.shape[0], dtype=np.uint64)
        for i in range(z.shape[0]):
            out[i] = _nb_splitmix_scalar(z[i])
        return out

    @njit(cache=True)
    def _nb_mix64_impl(tokens, experts, salt):
        n = tokens.shape[0]
        out = np.empty(n, dtype=np.uint64)
        c1 = np.uint64(0xBF58476D1CE4E5B9)
        c2 = np.uint64(0x94D049BB133111EB)
        s = np.uint64(salt)
        for i in range(n):
            z = (np.uint64(tokens[i]) + np.uint64(1)) * c1 ^ (
                np.uint64(experts[i]) + np.uint64(1)
            ) * c2 ^ s
            out[i] = _nb_splitmix_scalar(_nb_splitmix_scalar(z))
        return out

    @njit(cache=True)
    def _nb_fold_u64_impl(vals):
        acc = np.uint64(0)
        for i in range(vals.shape[0]):
            acc = acc + vals[i]
        return acc

    @njit(cache=True)
    def _nb_topk_select_impl(keys, k):
        rows, n = keys.shape
        out = np.empty((rows, k), dtype=np.int32)
        taken = np.zeros(n, dtype=np.bool_)
        for r in range(rows):
            taken[:] = False
            for j in range(k):
                best = -1
                bestv = -np.inf
                for c in range(n):
                    if not taken[c] and (best == -1 or keys[r, c] > bestv):
                        bestv = keys[r, c]
                        best = c
                out[r, j] = best
                taken[best] = True
        return out

    @njit(cache=True)
    def _nb_lru_replay_impl(tags, capacity):
        slot_tag = np.full(capacity, -1, dtype=np.int64)
        slot_stamp = np.zeros(capacity, dtype=np.int64)
        size = 0
        clock = np.int64(0)
        hits = 0
        misses = 0
        for idx in range(tags.shape[0]):
            t = tags[idx]
            clock += 1
            found = -1
            for s in range(size):
                if slot_tag[s] == t:
                    found = s
                    break
            if found >= 0:
                hits += 1
                slot_stamp[found] = clock
            else:
                misses += 1
                if size < capacity:
                    slot_tag[size] = t
                    slot_stamp[size] = clock
                    size += 1
                else:
                    victim = 0
                    for s in range(1, capacity):
                        if slot_stamp[s] < slot_stamp[victim]:
                            victim = s
                    slot_tag[victim] = t
                    slot_stamp[victim] = clock
        return hits, misses

    def _nb_mix64(tokens, experts, salt):
        return _nb_mix64_impl(
            np.ascontiguousarray(tokens, dtype=np.int64),
            np.ascontiguousarray(experts, dtype=np.int64),
            np.uint64(salt),
        )

    def _nb_fold_u64(vals):
        return int(_nb_fold_u64_impl(np.ascontiguousarray(vals, dtype=np.uint64)))

    def _nb_topk_select(keys, k):
        return _nb_topk_select_impl(np.ascontiguousarray(keys, dtype=np.float64), k)

    def _nb_lru_replay(tags, capacity):
        h, m = _nb_lru_replay_impl(
            np.ascontiguousarray(tags, dtype=np.int64), capacity
        )
        return int(h), int(m)

    _NB_IMPL = {
        "splitmix64_arr": lambda z: _nb_splitmix64_arr(
            np.ascontiguousarray(z, dtype=np.uint64)
        ),
        "mix64": _nb_mix64,
        "fold_u64": _nb_fold_u64,
        "topk_select": _nb_topk_select,
        "lru_replay": _nb_lru_replay,
    }

IMPLS = {"py": _PY_IMPL}
if HAVE_NUMBA:
    IMPLS["nb"] = _NB_IMPL

_ACTIVE = _NB_IMPL if HAVE_NUMBA else _PY_IMPL

splitmix64_arr = _ACTIVE["splitmix64_arr"]
mix64 = _ACTIVE["mix64"]
fold_u64 = _ACTIVE["fold_u64"]
topk_select = _ACTIVE["topk_select"]
lru_replay = _ACTIVE["lru_replay"]

ACTIVE_IMPL = "nb" if HAVE_NUMBA else "py"
