"""Blockage-split intensity measures and void probabilities of the tier PPPs."""

from __future__ import annotations

import math

import numpy as np

from .model import BlockageModel, Link, Scenario, TierRef
from .quad import gamma2_lower


def los_probability(x, blockage: BlockageModel):
    """P(link of length x is LOS) = exp(-beta x)."""
    return blockage.los_probability(x)[()]


def ball_los(lam: float, beta: float, r):
    """Expected LOS BSs of a density-``lam`` PPP inside B(0, r)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore"):
        out = 2.0 * math.pi * lam * gamma2_lower(beta * r) / (beta * beta)
    return np.where(np.isinf(r), 2.0 * math.pi * lam / (beta * beta), out)[()]


def ball_nlos(lam: float, beta: float, r):
    r = np.asarray(r, dtype=float)
    return (math.pi * lam * r * r - ball_los(lam, beta, r))[()]


def intensity_ball(tier: TierRef, r, scenario: Scenario):
    """Lambda_{m,p}(B(r)) for the tier's operator density."""
    lam = scenario.operators[tier.operator].bs_density
    beta = scenario.blockage.beta
    if tier.link is Link.LOS:
        return ball_los(lam, beta, r)
    return ball_nlos(lam, beta, r)


def void_probability(tier: TierRef, d, scenario: Scenario):
    """P(no tier BS within distance d)."""
    with np.errstate(over="ignore"):
        return np.exp(-np.asarray(intensity_ball(tier, d, scenario), dtype=float))[()]
