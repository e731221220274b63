"""Reduction-buffer slot lifecycle: folds, evictions, tombstones."""

import pytest

from moeswitchsim.engine import ProtocolError
from moeswitchsim.switchfab import (
    MASK64,
    PortReductionBuffer,
    SwitchReduction,
    fold_values,
)


def test_complete_fold_returns_sum_modulo_64():
    buf = PortReductionBuffer(capacity_bytes=1024, slot_bytes=256)
    vals = [MASK64 - 10, 7, 9]
    acts = []
    for v in vals:
        acts = buf.deliver(5, v, expected=3)
    assert [a.kind for a in acts] == ["complete"]
    assert acts[0].value == fold_values(vals)
    assert acts[0].folded == 3
    assert buf.opened == 1 and buf.completed == 1 and buf.evictions == 0
    assert not buf.slots


def test_slot_opens_at_first_partial_only():
    buf = PortReductionBuffer(capacity_bytes=1024, slot_bytes=256)
    buf.deliver(1, 10, expected=2)
    assert buf.opened == 1
    buf.deliver(1, 10, expected=2)
    assert buf.opened == 1  # second partial reuses the open slot


def test_eviction_is_fifo_and_flushes_partial_sum():
    buf = PortReductionBuffer(capacity_bytes=512, slot_bytes=256)  # two slots
    buf.deliver(1, 100, expected=2)
    buf.deliver(2, 200, expected=2)
    acts = buf.deliver(3, 300, expected=2)  # needs a slot: evict token 1
    kinds = [a.kind for a in acts]
    assert kinds == ["evict_flush"]
    ev = acts[0]
    assert ev.token == 1 and ev.value == 100 and ev.folded == 1
    assert buf.evictions == 1
    # token 1 is tombstoned: its late partial forwards without re-admission
    acts = buf.deliver(1, 101, expected=2)
    assert [a.kind for a in acts] == ["forward"]
    assert acts[0].value == 101 and acts[0].folded == 1
    assert buf.forwards == 1
    assert 1 not in buf.tombstones  # drained after the last due partial


def test_tombstone_drains_then_token_reopens_fresh():
    buf = PortReductionBuffer(capacity_bytes=256, slot_bytes=256)
    buf.deliver(1, 1, expected=3)
    buf.deliver(2, 2, expected=1)  # evicts token 1 (2 partials still due)
    assert buf.tombstones == {1: 2}
    buf.deliver(1, 1, expected=3)
    buf.deliver(1, 1, expected=3)
    assert not buf.tombstones  # drained and removed
    # a later delivery for the same token id is a fresh slot, not an error
    acts = buf.deliver(1, 9, expected=1)
    assert [a.kind for a in acts] == ["complete"]
    assert buf.opened == 3


def test_slot_closes_exactly_at_expected_count():
    buf = PortReductionBuffer(capacity_bytes=256, slot_bytes=256)
    acts = buf.deliver(1, 5, expected=1)
    assert [a.kind for a in acts] == ["complete"] and not buf.slots
    buf.deliver(1, 1, expected=2)
    assert buf.slots[1].folded == 1
    acts = buf.deliver(1, 1, expected=2)
    assert [a.kind for a in acts] == ["complete"] and not buf.slots


def test_slot_larger_than_partition_rejected():
    with pytest.raises(ProtocolError):
        PortReductionBuffer(capacity_bytes=128, slot_bytes=256)


def test_switch_reduction_partitions_are_per_source():
    red = SwitchReduction(partition_bytes=256, slot_bytes=256)
    # one slot per source partition: different sources never evict each other
    red.deliver(0, 1, 10, expected=2)
    red.deliver(1, 1, 20, expected=2)
    opened, completed, evictions, forwards, peak = red.stats()
    assert opened == 2 and evictions == 0 and peak == 1
    with pytest.raises(ProtocolError):
        red.assert_drained()
    red.deliver(0, 1, 10, expected=2)
    red.deliver(1, 1, 20, expected=2)
    red.assert_drained()
    assert red.stats()[1] == 2


def test_slot_conservation_under_eviction_storm():
    # 1-slot partition, interleaved tokens: every open slot either completes
    # or evicts, and every partial is absorbed exactly once
    buf = PortReductionBuffer(capacity_bytes=256, slot_bytes=256)
    expected = {t: 3 for t in range(8)}
    absorbed = 0
    for rnd in range(3):
        for t in range(8):
            for a in buf.deliver(t, t * 1000 + rnd, expected=3):
                assert a.kind in ("complete", "evict_flush", "forward")
        absorbed += 8
    buf_total = buf.completed + buf.evictions
    assert buf.opened == buf_total  # conservation: no slot left open
    assert buf.opened + buf.forwards >= 8  # churn happened
    assert not buf.slots and not buf.tombstones
