import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmshare.assoc import (AssociationContext, association_matrix, association_probability, exclusion_radius,
                           idle_probability, load_model, load_pmf, mean_load, serving_distance_pdf,
                           thinned_densities)
from mmshare.model import Link, OperatorParams, TierRef, make_system_preset, per_km2
from mmshare.quad import integrate

LINKS = (Link.LOS, Link.NLOS)


def asym_open():
    return make_system_preset("sys2", [OperatorParams(bs_density=per_km2(45)),
                                       OperatorParams(bs_density=per_km2(15))])


@pytest.mark.parametrize("kind", ["sys1", "sys2", "sys3", "sys4"])
def test_serving_pdf_normalizes(kind):
    sc = make_system_preset(kind)
    n = 0
    total = 0.0
    for k in sc.accessible(n):
        for s in LINKS:
            ctx = AssociationContext(n, k, s)
            v, _ = integrate(lambda x: serving_distance_pdf(ctx, x, sc), 0.0, math.inf, scale=100.0)
            total += v
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("sc", [make_system_preset("sys2"), asym_open(), make_system_preset("sys1")])
def test_association_probabilities_sum_to_one(sc):
    A = association_matrix(sc)
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-6)


def test_symmetric_open_access_splits_evenly():
    assert association_probability(0, 1, make_system_preset("sys2")) == pytest.approx(0.5, abs=1e-9)


def test_denser_operator_attracts_more_users():
    A = association_matrix(asym_open())
    assert A[0, 0] > 0.5 > A[0, 1]


def test_closed_access_is_own_operator(systems):
    A = association_matrix(systems["sys3"])
    np.testing.assert_array_equal(A, np.eye(2))


@given(st.floats(1.0, 2000.0), st.sampled_from(LINKS), st.sampled_from(LINKS))
def test_exclusion_radius_equalizes_average_power(x, s, p):
    sc = make_system_preset("sys2", [OperatorParams(tx_power_dbm=26), OperatorParams(tx_power_dbm=31)])
    ch = sc.channel
    for k in (0, 1):
        for m in (0, 1):
            d = exclusion_radius(TierRef(k, s), TierRef(m, p), x, sc)
            lhs = sc.operators[m].tx_power_w * ch.gain(p) * d ** (-ch.alpha(p))
            rhs = sc.operators[k].tx_power_w * ch.gain(s) * x ** (-ch.alpha(s))
            assert lhs == pytest.approx(rhs, rel=1e-9)


def test_inaccessible_operator_has_zero_radius(systems):
    assert exclusion_radius(TierRef(0, Link.LOS), TierRef(1, Link.LOS), 50.0, systems["sys3"]) == 0.0


@given(st.floats(0.01, 50.0))
def test_load_pmf_normalizes_and_has_mean_eta(eta):
    z = np.arange(0, 20000)
    p = load_pmf(z, eta)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    assert (z * p).sum() == pytest.approx(eta, rel=1e-9)


def test_idle_probability_is_pmf_at_zero():
    for eta in (0.3, 1.0, 6.67):
        assert idle_probability(eta) == pytest.approx(load_pmf(0, eta), rel=1e-12)
    # (1 + 1/3.5)^-3.5 evaluated directly
    assert idle_probability(1.0) == pytest.approx(0.4149486509808664, rel=1e-12)


def test_load_model_default_parameters(systems):
    lm = load_model(systems["sys1"])
    eta = per_km2(200) / per_km2(30)
    np.testing.assert_allclose(lm.eta, eta)
    np.testing.assert_allclose(lm.mean_load, 1 + 1.28 * eta)
    assert mean_load(0, systems["sys1"], lm.assoc) == pytest.approx(1 + 1.28 * eta)
    np.testing.assert_allclose(thinned_densities(systems["sys1"], lm), per_km2(30) * (1 - lm.idle_prob))


def test_open_access_load_balances_users():
    sc = asym_open()
    lm = load_model(sc)
    users = sum(op.user_density for op in sc.operators)
    served = sum(lm.eta[k] * sc.operators[k].bs_density for k in range(2))
    assert served == pytest.approx(users, rel=1e-9)
