import math
from dataclasses import replace

import numpy as np
import pytest

from mmshare import _accel
from mmshare.assoc import AssociationContext, association_matrix
from mmshare.coverage import median_rate
from mmshare.mc import (Deployment, Fading, McConfig, Shadowing, _block_points, estimate_association,
                        estimate_laplace, estimate_rate_ccdf, estimate_sinr_ccdf, rate_samples, simulate)
from mmshare.model import AntennaKind, Link, OperatorParams, make_system_preset

SMALL = McConfig(drops=4000, seed=3)


def test_same_seed_is_bit_identical(systems):
    a = simulate(systems["sys3"], SMALL)
    b = simulate(systems["sys3"], SMALL)
    assert np.array_equal(a.sinr, b.sinr)


def test_different_seed_differs(systems):
    a = simulate(systems["sys3"], SMALL)
    b = simulate(systems["sys3"], replace(SMALL, seed=4))
    assert not np.array_equal(a.sinr, b.sinr)


def test_worker_count_does_not_change_results(systems, monkeypatch):
    monkeypatch.setenv("MMSHARE_THREADS", "1")
    a = simulate(systems["sys1"], SMALL)
    monkeypatch.setenv("MMSHARE_THREADS", "4")
    b = simulate(systems["sys1"], SMALL)
    assert np.array_equal(a.sinr, b.sinr)


def test_backends_reduce_identically(systems):
    res = {}
    for b in _accel.available_backends():
        with _accel.use_backend(b):
            res[b] = simulate(systems["sys2"], SMALL)
    vals = list(res.values())
    for v in vals[1:]:
        np.testing.assert_array_equal(v.serving_operator, vals[0].serving_operator)
        np.testing.assert_allclose(v.sinr, vals[0].sinr, rtol=1e-12)


def test_link_budget_without_fading(systems):
    sc = systems["sys1"]
    s = simulate(sc, McConfig(drops=500, seed=1, fading=Fading.nakagami(math.inf)))
    ch = sc.channel
    a = np.where(s.serving_los, ch.alpha_los, ch.alpha_nlos)
    C = np.where(s.serving_los, ch.gain(Link.LOS), ch.gain(Link.NLOS))
    budget = sc.operators[0].tx_power_w * C * s.serving_distance ** -a * sc.antenna.g_main
    np.testing.assert_allclose(s.signal, budget, rtol=1e-12)
    np.testing.assert_allclose(s.sinr, budget / (s.interference + sc.noise_power(0)), rtol=1e-12)


def test_closed_access_serves_own_operator(systems):
    freq, _ = estimate_association(systems["sys1"], SMALL)
    np.testing.assert_array_equal(freq, np.eye(2))


def test_symmetric_open_access_association(systems):
    cfg = McConfig(drops=20_000, seed=5)
    freq, se = estimate_association(systems["sys2"], cfg)
    assert abs(freq[0, 1] - 0.5) <= 3 * se[0, 1]


def test_asymmetric_association_matches_quadrature():
    sc = make_system_preset("sys2", [OperatorParams(bs_density=4.5e-5), OperatorParams(bs_density=1.5e-5)])
    freq, se = estimate_association(sc, McConfig(drops=20_000, seed=6))
    A = association_matrix(sc)
    assert np.all(np.abs(freq - A) <= 3 * se + 1e-12)


def test_colocated_sites_share_position_and_blockage(systems):
    sc = systems["sys4"]
    pts = _block_points(sc, SMALL, 0, 50, [0, 1], 1000.0)
    a, b = pts.op == 0, pts.op == 1
    np.testing.assert_array_equal(pts.r[a], pts.r[b])
    np.testing.assert_array_equal(pts.los[a], pts.los[b])
    assert not np.array_equal(pts.fade[a], pts.fade[b])


def test_independent_layers_do_not_share_points(systems):
    pts = _block_points(systems["sys3"], SMALL, 0, 50, [0, 1], 1000.0)
    assert not np.array_equal(np.sort(pts.r[pts.op == 0])[:10], np.sort(pts.r[pts.op == 1])[:10])


def test_grid_deployment_has_lattice_density(systems):
    cfg = replace(SMALL, deployment=Deployment.SHIFTED_GRID)
    R = 1000.0
    pts = _block_points(systems["sys1"], cfg, 0, 200, [0], R)
    per_drop = np.bincount(pts.drop, minlength=200)
    assert per_drop.mean() == pytest.approx(3e-5 * math.pi * R * R, rel=0.02)
    assert per_drop.std() < 5


def test_laplace_trivial_limits(systems):
    ctx = AssociationContext(0, 0, Link.LOS)
    assert estimate_laplace(systems["sys1"], SMALL, 0.0, ctx, 50.0) == (1.0, 0.0)
    sparse = make_system_preset("sys1", [OperatorParams(bs_density=1e-14)] * 2)
    est, _ = estimate_laplace(sparse, SMALL, 1e9, ctx, 50.0)
    assert est == pytest.approx(1.0, abs=1e-3)


def test_rate_ccdf_at_zero_is_one(systems):
    c = estimate_rate_ccdf(systems["sys1"], SMALL, [0.0, 1e7, 1e8])
    assert c.probabilities[0] == 1.0
    assert c.is_valid_ccdf()


def test_partial_loading_turns_interferers_off():
    op = OperatorParams(user_density=3e-5)
    full = simulate(make_system_preset("sys3", [op, op]), SMALL)
    part = simulate(make_system_preset("sys3", [op, op], partial_loading=True), SMALL)
    assert part.interference.mean() < 0.8 * full.interference.mean()


def test_mc_sys3_vs_sys1_median_ratio(systems):
    cfg = McConfig(drops=20_000, seed=8)
    m = {k: np.median(rate_samples(systems[k], simulate(systems[k], cfg))) for k in ("sys1", "sys3")}
    assert m["sys3"] / m["sys1"] == pytest.approx(1.25, abs=0.1)


def test_nakagami_and_realistic_setups_keep_system_ordering(systems):
    setups = [
        McConfig(drops=10_000, seed=9, fading=Fading.nakagami(10)),
        McConfig(drops=10_000, seed=9, deployment=Deployment.SHIFTED_GRID, shadowing=Shadowing()),
    ]
    for cfg in setups:
        med = {}
        for k in ("sys1", "sys2", "sys3"):
            sc = systems[k]
            if cfg.deployment is Deployment.SHIFTED_GRID:
                sc = replace(sc, antenna=replace(sc.antenna, kind=AntennaKind.PARABOLIC_3GPP))
            med[k] = np.median(rate_samples(sc, simulate(sc, cfg)))
        assert med["sys2"] > med["sys3"] > med["sys1"]


@pytest.mark.slow
def test_region_doubling_changes_ccdf_by_less_than_one_stderr(systems):
    sc = systems["sys3"]
    cfg = McConfig(drops=20_000, seed=10, region_radius=1500.0)
    a = estimate_sinr_ccdf(sc, cfg)
    b = estimate_sinr_ccdf(sc, replace(cfg, region_radius=3000.0))
    assert np.all(np.abs(a.probabilities - b.probabilities) <= np.maximum(a.stderr, 1e-12))


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(drops=0)
    with pytest.raises(ValueError):
        McConfig(seed=-1)
    with pytest.raises(ValueError):
        Fading.nakagami(0)
