import math

import pytest
from hypothesis import given, strategies as st

from gputherm.fixtures import (KERNELS, Scenario, active_sms, cache_pressure, dram_total_power,
                               dram_weights, fixture_report, sm_activity)
from gputherm.powertrace import parse_power_report, serialize_power_report


def test_small_matmul_has_no_pressure():
    s = Scenario("matmul_linear", 100)
    assert 3 * 40000 / 786432 - 1 < 0
    assert cache_pressure(100, False) == 0.0
    assert dram_total_power(s) == 1.0
    w = dram_weights(s)
    assert len(w) == 6 and all(v == pytest.approx(1 / 6) for v in w.values())


def test_800_saturates_and_skews():
    assert 4 * 800 * 800 == 2_560_000
    assert cache_pressure(800, False) == 1.0
    w = dram_weights(Scenario("matmul_linear", 800))
    assert sorted(w.values(), reverse=True) == [0.5, 0.2, 0.1, 0.1, 0.05, 0.05]
    # DRAM_L1 and DRAM_R1 tie for nearest to the centered L2; stored order breaks the tie
    assert max(w, key=w.get) == "DRAM_L1"
    assert w["DRAM_R1"] == 0.2


def test_nw_pressure_term_is_one_and_a_half_times_matmul():
    nw = dram_total_power(Scenario("needleman_wunsch", 800))
    mm = dram_total_power(Scenario("matmul_linear", 800))
    assert nw - 1.5 * 1.0 == pytest.approx(1.5 * (mm - 1.0))
    assert nw == pytest.approx(1.5 * mm)


def test_tiled_reduces_dram():
    for n in (100, 250, 400, 800):
        assert dram_total_power(Scenario("matmul_tiled", n, True)) < \
            dram_total_power(Scenario("matmul_linear", n, True))


def test_active_sms():
    assert [active_sms(n) for n in (1, 32, 33, 64, 65, 96, 97, 800)] == [1, 1, 4, 4, 9, 9, 16, 16]


def _spread(n):
    a = sm_activity(n)
    return max(a) - min(a)


def test_spread_strictly_decreases_with_active_sms():
    spreads = [_spread(n) for n in (32, 64, 96, 97)]
    assert all(b < a for a, b in zip(spreads, spreads[1:]))


@given(st.integers(1, 3000), st.integers(1, 3000))
def test_spread_non_increasing_in_size(a, b):
    lo, hi = sorted((a, b))
    assert _spread(hi) <= _spread(lo) + 1e-15


@given(st.sampled_from(KERNELS), st.integers(1, 3000), st.integers(1, 3000))
def test_dram_non_decreasing_in_size(kernel, a, b):
    lo, hi = sorted((a, b))
    for red in (False, True):
        assert dram_total_power(Scenario(kernel, hi, red)) >= dram_total_power(Scenario(kernel, lo, red))


@given(st.sampled_from(KERNELS), st.integers(1, 3000))
def test_reduced_l2_never_lowers_dram(kernel, n):
    assert dram_total_power(Scenario(kernel, n, True)) >= dram_total_power(Scenario(kernel, n, False))


def test_report_shape_and_ratios():
    rep = fixture_report(Scenario("matmul_linear", 250))
    assert len(rep.entries) == 16 * 5 + 3 + 6
    for e in rep.entries:
        assert e.min_W == pytest.approx(0.8 * e.avg_W) and e.max_W == pytest.approx(1.3 * e.avg_W)
    dram = math.fsum(e.avg_W for e in rep.entries if e.component.startswith("DRAM"))
    assert dram == pytest.approx(1.0)


def test_report_deterministic_and_parseable():
    s = Scenario("needleman_wunsch", 400, True)
    text = serialize_power_report(fixture_report(s))
    assert text == serialize_power_report(fixture_report(s))
    assert parse_power_report(text) == fixture_report(s)


@pytest.mark.parametrize("kernel, size", [("bogus", 10), ("matmul_linear", 0), ("matmul_linear", -3)])
def test_invalid_scenario(kernel, size):
    with pytest.raises(ValueError):
        Scenario(kernel, size)
