"""Address-list allocation and the translation LRU."""

import pytest

from moeswitchsim.addressing import REGION_SHIFT, AlManager, AlTlb, maddr, mbase, vaddr
from moeswitchsim.engine import ProtocolError


def test_region_bases_are_disjoint_per_expert_and_stage():
    n = 16
    bases = {mbase(e, s, n) for e in range(n) for s in (0, 1)}
    assert len(bases) == 2 * n
    # a full token span never crosses into the next region
    span = 4096 * 16384
    assert span < (1 << REGION_SHIFT)
    assert maddr(3, 1, n, token=5, token_bytes=4096, frag=2, granularity=256) == (
        mbase(3, 1, n) + 5 * 4096 + 512
    )


def test_vaddr_is_dense_row_layout():
    assert vaddr(1000, lidx=3, token_bytes=64, offset=16) == 1000 + 192 + 16


def test_al_assign_is_dense_and_idempotent():
    al = AlManager()
    a = al.assign(7, 100)
    b = al.assign(7, 200)
    c = al.assign(9, 100)
    assert (a, b, c) == (0, 1, 0)
    assert al.assign(7, 100) == 0  # re-assign returns the existing slot
    assert al.lookup(7, 200) == 1
    assert al.count(7) == 2 and al.count(9) == 1
    al.check_bijective()


def test_al_lookup_unknown_raises():
    al = AlManager()
    with pytest.raises(ProtocolError):
        al.lookup(1, 1)


def test_al_bijectivity_violation_detected():
    al = AlManager()
    al.assign(1, 10)
    al.assign(1, 11)
    al.table[(1, 12)] = 5  # corrupt: slot 5 with only 2 handed out
    al.next_lidx[1] = 3
    with pytest.raises(ProtocolError):
        al.check_bijective()


def test_tlb_run_accounting():
    tlb = AlTlb(entries=4, miss_penalty_ps=400)
    assert tlb.access((1, 1), run_len=8) == 400  # cold probe misses
    assert tlb.access((1, 1), run_len=8) == 0  # warm probe hits
    assert tlb.misses == 1
    assert tlb.hits == 7 + 8
    assert tlb.accesses == 16
    assert tlb.hit_rate == pytest.approx(15 / 16)


def test_tlb_lru_eviction_order():
    tlb = AlTlb(entries=2, miss_penalty_ps=1)
    tlb.access((0, 0), 1)
    tlb.access((1, 1), 1)
    tlb.access((0, 0), 1)  # refresh; (1,1) is now LRU
    tlb.access((2, 2), 1)  # evicts (1,1)
    assert tlb.access((0, 0), 1) == 0
    assert tlb.access((1, 1), 1) == 1  # missed: was evicted
    assert tlb.misses == 4


def test_tlb_trace_records_probes_only():
    tlb = AlTlb(entries=4, miss_penalty_ps=1)
    tlb.trace_enabled = True
    tlb.access((1, 2), run_len=5)
    tlb.access((1, 2), run_len=5)
    assert tlb.probe_trace == [(1 << 32) | 2] * 2
    assert tlb.accesses == 10
