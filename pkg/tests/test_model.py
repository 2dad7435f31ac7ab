import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmshare.model import (AntennaPattern, ChannelParams, DistributionCurve, Link, OperatorParams, Scenario,
                           ScenarioError, SystemKind, db_to_lin, dbm_to_w, lin_to_db, make_system_preset,
                           validate, w_to_dbm)


def test_presets_validate(systems):
    for sc in systems.values():
        assert validate(sc) == []


def test_sys1_bandwidth_and_groups(systems):
    sc = systems["sys1"]
    assert sc.bandwidth(0) == sc.bandwidth(1) == 100e6
    assert sc.group_of(0) == {0}
    assert sc.access_sets[0] == {0}


def test_sys3_pools_bandwidth(systems):
    sc = systems["sys3"]
    assert sc.bandwidth(0) == sc.bandwidth(1) == 200e6
    assert sc.group_of(0) == {0, 1}


def test_sys2_open_access(systems):
    assert systems["sys2"].access_sets[0] == {0, 1}


def test_sys4_colocated_and_equal_density_required():
    assert make_system_preset("sys4").colocated
    with pytest.raises(ScenarioError):
        make_system_preset("sys4", [OperatorParams(bs_density=3e-5), OperatorParams(bs_density=2e-5)])


def test_single_operator_sys2_equals_sys1():
    op = [OperatorParams()]
    assert make_system_preset("sys2", op) == make_system_preset("sys1", op)


def test_group_invariant_holds_for_every_operator(systems):
    for sc in systems.values():
        for k in range(sc.n_operators):
            assert k in sc.group_of(k)
            assert sc.bandwidth(k) == sum(sc.operators[m].licensed_bw_hz for m in sc.group_of(k))


def test_not_a_partition_is_reported(systems):
    bad = Scenario(operators=systems["sys1"].operators, access_sets=({0}, {1}),
                   sharing_groups=({0}, {0, 1}))
    assert any("not a partition" in v for v in validate(bad))


def test_zero_beamwidth_is_reported(systems):
    sc = systems["sys1"].with_beamwidth(0.0)
    assert any("half beamwidth must be positive" in v for v in validate(sc))


def test_colocated_requires_closed_access(systems):
    from dataclasses import replace
    sc = replace(systems["sys2"], colocated=True)
    assert any("closed access" in v for v in validate(sc))


def test_system_kind_parse():
    assert SystemKind.parse("System 3") is SystemKind.SYS3
    assert SystemKind.parse("sys4") is SystemKind.SYS4


@given(st.floats(-200, 200))
def test_db_round_trip(x):
    assert lin_to_db(db_to_lin(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)
    assert w_to_dbm(dbm_to_w(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_channel_helpers():
    ch = ChannelParams()
    assert ch.alpha(Link.LOS) == 2 and ch.alpha(Link.NLOS) == 4
    assert ch.gain(Link.LOS) == pytest.approx(1e-6)
    assert ch.noise_psd_w_hz == pytest.approx(10 ** ((-174 + 10 - 30) / 10))
    assert ch.shifted(-8.32).gain_los_db == pytest.approx(-68.32)


def test_antenna_side_lobe_can_be_zero():
    assert AntennaPattern(g_side_db=-math.inf).g_side == 0.0
    assert AntennaPattern(half_beamwidth_rad=math.pi).aligned_fraction == 1.0


def test_distribution_curve_checks():
    good = DistributionCurve([0, 1, 2], [1.0, 0.5, 0.1])
    assert good.is_valid_ccdf()
    assert "CCDF must be non-increasing" in DistributionCurve([0, 1], [0.2, 0.3]).violations()
    assert "probabilities must lie in [0, 1]" in DistributionCurve([0, 1], [1.2, 0.3]).violations()
    with pytest.raises(ValueError):
        DistributionCurve([0, 1], [1.0])
