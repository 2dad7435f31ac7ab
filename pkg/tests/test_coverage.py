import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmshare import _accel
from mmshare.assoc import association_probability, load_model
from mmshare.coverage import (corollary1_coverage, corollary2_rate, corollary_scenario, median_rate,
                              operator_coverage, quantile_of_ccdf, rate_coverage, required_bandwidth,
                              sinr_coverage, sinr_coverage_colocated)
from mmshare.model import OperatorParams, make_system_preset
from mmshare.quad import NoBracket

KINDS = ["sys1", "sys2", "sys3", "sys4"]


@pytest.mark.parametrize("kind", KINDS)
def test_sinr_ccdf_is_valid(kind, systems):
    c = sinr_coverage(systems[kind])
    assert c.is_valid_ccdf()
    assert sinr_coverage(systems[kind], [-200.0]).probabilities[0] == pytest.approx(1.0, abs=1e-6)
    assert sinr_coverage(systems[kind], [150.0]).probabilities[0] == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("kind", KINDS)
def test_rate_ccdf_is_valid(kind, systems):
    rates = np.geomspace(1e5, 1e10, 30)
    c = rate_coverage(systems[kind], rates)
    assert c.is_valid_ccdf()
    assert rate_coverage(systems[kind], [0.0]).probabilities[0] == pytest.approx(1.0, abs=1e-6)


def test_sys4_crosses_sys3(systems):
    th = np.arange(-30.0, 51.0, 1.0)
    d = sinr_coverage(systems["sys4"], th).probabilities - sinr_coverage(systems["sys3"], th).probabilities
    lo = d[th <= -5]
    hi = d[th >= 20]
    assert lo.max() > 0 and hi.min() < 0


def test_open_access_dominates_closed_sharing(systems):
    rates = np.geomspace(1e6, 3e9, 25)
    r2 = rate_coverage(systems["sys2"], rates).probabilities
    r3 = rate_coverage(systems["sys3"], rates).probabilities
    assert np.all(r2 >= r3 - 1e-9)


def test_operator_components_bounded_by_association():
    sc = make_system_preset("sys2", [OperatorParams(bs_density=4.5e-5), OperatorParams(bs_density=1.5e-5)])
    T = 10 ** (np.arange(-20, 31, 10) / 10)
    parts = operator_coverage(sc, T)
    for k, v in parts.items():
        A = association_probability(0, k, sc)
        assert np.all(v >= 0) and np.all(v <= A + 1e-9)
    assert np.all(sum(parts.values()) <= 1 + 1e-9)


def test_colocated_single_operator_equals_sys1():
    op = [OperatorParams()]
    th = np.arange(-20.0, 41.0, 5.0)
    a = sinr_coverage_colocated(make_system_preset("sys4", op), th).probabilities
    b = sinr_coverage(make_system_preset("sys1", op), th).probabilities
    np.testing.assert_allclose(a, b, atol=1e-7)


def test_evaluation_order_does_not_change_values(systems):
    th = np.arange(-10.0, 31.0, 4.0)
    fwd = sinr_coverage(systems["sys3"], th).probabilities
    rev = sinr_coverage(systems["sys3"], th[::-1]).probabilities[::-1]
    single = np.array([sinr_coverage(systems["sys3"], [t]).probabilities[0] for t in th])
    assert np.array_equal(fwd, rev) and np.array_equal(fwd, single)


def test_partial_loading_improves_coverage():
    op = OperatorParams(user_density=3e-5)
    full = sinr_coverage(make_system_preset("sys3", [op, op]), [10.0]).probabilities[0]
    part = sinr_coverage(make_system_preset("sys3", [op, op], partial_loading=True), [10.0]).probabilities[0]
    assert part > full


def test_corollary1_value():
    assert corollary1_coverage(1, math.pi, 1.0) == pytest.approx(1 / (1 + math.pi / 4), rel=1e-12)
    assert corollary1_coverage(1, math.pi, 1.0) == pytest.approx(0.5601, abs=1e-4)


@given(st.integers(1, 8), st.floats(0.01, math.pi), st.floats(1e-3, 1e4))
def test_corollary1_decreases_with_operators(n, theta, T):
    assert corollary1_coverage(n + 1, theta, T) < corollary1_coverage(n, theta, T)


def test_corollary1_narrow_beam_limit():
    assert corollary1_coverage(3, 1e-12, 100.0) == pytest.approx(1.0, abs=1e-9)


def test_corollary2_at_zero():
    assert corollary2_rate(2, math.radians(10), 0.0) == 1.0


@pytest.mark.parametrize("n", [1, 2, 4])
def test_engine_reproduces_corollary2_through_rate_coverage(n):
    theta = math.radians(10)
    sc = corollary_scenario(n, theta)
    lm = load_model(sc)
    B = sc.operators[0].licensed_bw_hz
    rho_p = np.array([0.5, 2.0, 5.0, 10.0])
    rho = rho_p * B / lm.mean_load[0]
    got = rate_coverage(sc, rho, load=lm).probabilities
    np.testing.assert_allclose(got, corollary2_rate(n, theta, rho_p), atol=1e-3)


def test_median_with_injected_ccdf():
    assert median_rate(ccdf=lambda r: 2.0 ** -np.asarray(r)) == pytest.approx(1.0, rel=1e-4)
    assert quantile_of_ccdf(lambda r: np.exp(-np.asarray(r)), 0.25, 0.1) == pytest.approx(math.log(4), rel=1e-4)


def test_required_bandwidth_degenerate_target(systems):
    assert required_bandwidth(systems["sys3"], 0.0) == 0.0


def test_required_bandwidth_no_bracket(systems):
    with pytest.raises(NoBracket):
        required_bandwidth(systems["sys3"], 1e12, max_bw_hz=400e6)


def test_required_bandwidth_exceeds_license_for_wide_beams(systems):
    deg = math.radians(45)
    target = median_rate(systems["sys1"].with_beamwidth(deg))
    assert required_bandwidth(systems["sys3"].with_beamwidth(deg), target) > 100e6


def test_median_increases_with_bandwidth(systems):
    meds = [median_rate(systems["sys3"].with_licensed_bw(b)) for b in (25e6, 50e6, 100e6, 200e6)]
    assert np.all(np.diff(meds) > 0)


def test_backends_agree(systems):
    th = np.array([-20.0, 0.0, 15.0, 35.0])
    out = {}
    for b in _accel.available_backends():
        with _accel.use_backend(b):
            out[b] = np.concatenate([sinr_coverage(systems[k], th).probabilities for k in KINDS])
    vals = list(out.values())
    for v in vals[1:]:
        np.testing.assert_allclose(v, vals[0], rtol=1e-12, atol=1e-14)
