import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from mmshare.geom import ball_los, ball_nlos, intensity_ball, los_probability, void_probability
from mmshare.model import BlockageModel, Link, TierRef


@given(st.floats(1e-7, 1e-3), st.floats(1e-4, 0.1), st.floats(0.0, 1e4))
def test_los_plus_nlos_is_full_ball(lam, beta, r):
    total = ball_los(lam, beta, r) + ball_nlos(lam, beta, r)
    assert total == pytest.approx(math.pi * lam * r * r, rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("r", [1.0, 50.0, 300.0, 2000.0])
def test_los_ball_against_quadrature(r):
    lam, beta = 3e-5, 0.007
    ref, _ = sint.quad(lambda y: 2 * math.pi * lam * math.exp(-beta * y) * y, 0, r, epsrel=1e-13)
    assert ball_los(lam, beta, r) == pytest.approx(ref, rel=1e-10)


def test_los_ball_saturates():
    assert ball_los(3e-5, 0.007, math.inf) == pytest.approx(2 * math.pi * 3e-5 / 0.007 ** 2)


def test_los_probability():
    assert los_probability(0.0, BlockageModel()) == 1.0
    assert los_probability(100.0, BlockageModel(0.007)) == pytest.approx(math.exp(-0.7))


def test_void_probability(systems):
    sc = systems["sys1"]
    tier = TierRef(0, Link.NLOS)
    assert void_probability(tier, 0.0, sc) == 1.0
    d = 200.0
    assert void_probability(tier, d, sc) == pytest.approx(math.exp(-intensity_ball(tier, d, sc)))
