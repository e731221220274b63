import pytest

from moeswitchsim import oracles as o
from moeswitchsim.engine import RngStreams


# frozen exact closed-form values; independent of the simulator
L8 = dict(p=0.227087497417278, d=7.266799917352881, red=0.431193922264735,
          spd=1.758068415832614, nvls=3.403588975056964)


def test_touch_probability_frozen_values():
    assert o.p_touch(256, 8, 8) == pytest.approx(L8["p"], abs=1e-12)
    assert o.p_touch(64, 2, 8) == pytest.approx(1 - (56 / 64) * (55 / 63), abs=1e-12)
    assert o.p_touch(16, 8, 9) == 1.0  # forced: k > N - m


def test_mean_distinct_gpus_frozen():
    assert o.mean_distinct_gpus(256, 32, 8) == pytest.approx(L8["d"], abs=1e-9)
    assert o.mean_distinct_gpus(64, 32, 8) == pytest.approx(7.555555555555557, abs=1e-9)
    assert o.mean_distinct_gpus(128, 32, 8) == pytest.approx(7.359370078740156, abs=1e-9)


def test_remote_counts():
    assert o.mean_remote_gpus(256, 32, 8) == pytest.approx(31 * L8["p"], abs=1e-9)
    assert o.mean_remote_experts(256, 32, 8) == pytest.approx(7.75)
    assert o.mean_remote_experts(64, 32, 8) == pytest.approx(7.75)
    assert o.mean_remote_experts(64, 32, 64) == pytest.approx(62.0)


def test_redundancy_band_and_monotonicity():
    vals = [
        o.redundancy_fraction(o.mean_distinct_gpus(256, 32, k)) for k in (8, 16, 32)
    ]
    assert vals[0] == pytest.approx(L8["red"], abs=1e-9)
    for v in vals:
        assert 0.40 <= v <= 0.50
    assert vals[0] < vals[1] < vals[2]


def test_ideal_speedup_band_and_degenerate():
    assert o.ideal_speedup(L8["d"]) == pytest.approx(L8["spd"], abs=1e-9)
    for n_exp in (64, 128, 256):
        s = o.ideal_speedup(o.mean_distinct_gpus(n_exp, 32, 8))
        assert 1.7 <= s <= 2.1
    assert o.ideal_speedup(1.0) == 1.0
    assert o.redundancy_fraction(1.0) == 0.0


def test_speedup_monotone_in_fanout():
    d_vals = [o.mean_distinct_gpus(256, 32, k) for k in (8, 16, 32)]
    s_vals = [o.ideal_speedup(d) for d in d_vals]
    assert d_vals == sorted(d_vals)
    assert s_vals == sorted(s_vals)


def test_nvls_ratio_frozen_and_degenerates():
    assert o.nvls_useless_ratio(256, 32, 8) == pytest.approx(L8["nvls"], abs=1e-9)
    assert 3.25 <= o.nvls_useless_ratio(256, 32, 8) <= 3.55
    # topk=1 closed form: (N - m) / m
    assert o.nvls_useless_ratio(256, 32, 1) == pytest.approx(248 / 8)
    assert o.nvls_useless_ratio(64, 32, 1) == pytest.approx(62 / 2)
    # every GPU always touched: nothing is useless
    assert o.nvls_useless_ratio(16, 2, 9) == 0.0


def test_mc_confirms_closed_forms_3sigma():
    streams = RngStreams(42)
    for n_exp, g, k in ((64, 32, 8), (256, 32, 8), (128, 32, 8)):
        est = o.mc_distinct_gpus(n_exp, g, k, 20000, streams)
        assert est.within(o.mean_distinct_gpus(n_exp, g, k)), (n_exp, est)


def test_mc_remote_and_useless_3sigma():
    streams = RngStreams(43)
    rem, ratio = o.mc_remote_stats(256, 32, 8, 40000, streams)
    assert rem.within(o.mean_remote_gpus(256, 32, 8))
    assert ratio.within(o.nvls_useless_ratio(256, 32, 8))


def test_invalid_args_rejected():
    with pytest.raises(ValueError):
        o.p_touch(8, 2, 9)
    with pytest.raises(ValueError):
        o.redundancy_fraction(0.5)
    with pytest.raises(ValueError):
        o.ideal_speedup(0.0)
