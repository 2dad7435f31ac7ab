"""Flatten a (scenario, user, serving tier) into the arrays the kernels consume.

Layout (all float64):

``scal``  alpha_s, C_s, P_k, G1, G2, aligned_fraction, beta, noise_w, lam_k,
          los_s, x_scale, 1/(C_s G1 P_k)
``voids`` rows ``[lam, los, c, e]``: tiers whose void ball of radius
          ``c * x**e`` enters the serving-distance pdf
``terms`` rows ``[lam, alpha, los, c, e, nops, coef_0..coef_{M-1}, kap_0..kap_{M-1}]``:
          one radial interference integral each; the Laplace argument ``t``
          multiplies every ``coef``
``lead``  rows ``[coef, kap]``: co-located interferers sitting on the
          serving site at distance ``x``
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Link, Scenario

S_ALPHA, S_CS, S_PK, S_G1, S_G2, S_THF, S_BETA, S_NOISE, S_LAMK, S_LOS, S_XSCALE, S_TINV = range(12)
T_LAM, T_ALPHA, T_LOS, T_C, T_E, T_NOPS, T_COEF = range(7)

LINKS = (Link.LOS, Link.NLOS)


@dataclass(frozen=True)
class ServingPlan:
    user: int
    operator: int
    link: Link
    scal: np.ndarray
    voids: np.ndarray
    terms: np.ndarray
    lead: np.ndarray

    @property
    def n_ops_max(self) -> int:
        return (self.terms.shape[1] - T_COEF) // 2


def _scalars(scenario: Scenario, k: int, s: Link, lam_k: float, x_scale: float) -> np.ndarray:
    ch, ant = scenario.channel, scenario.antenna
    a_s, c_s = ch.alpha(s), ch.gain(s)
    p_k = scenario.operators[k].tx_power_w
    g1 = ant.g_main
    return np.array([
        a_s, c_s, p_k, g1, ant.g_side, ant.aligned_fraction, scenario.blockage.beta,
        scenario.noise_power(k), lam_k, 1.0 if s is Link.LOS else 0.0, x_scale,
        1.0 / (c_s * g1 * p_k),
    ])


def exclusion_coefficients(scenario: Scenario, k: int, s: Link, m: int, p: Link) -> tuple[float, float]:
    """(c, e) with D^{ks}_{mp}(x) = c * x**e."""
    ch = scenario.channel
    ops = scenario.operators
    a_p = ch.alpha(p)
    ratio = ops[m].tx_power_w * ch.gain(p) / (ops[k].tx_power_w * ch.gain(s))
    return ratio ** (1.0 / a_p), ch.alpha(s) / a_p


def build_plan(scenario: Scenario, n: int, k: int, s: Link, kappa0=None) -> ServingPlan:
    """Arrays for a user of operator ``n`` served by tier ``{k, s}``.

    ``kappa0`` (per-operator idle probabilities) switches on partial loading:
    independent geometry thins interferer densities, co-located geometry
    mixes each interferer with its off state.
    """
    if scenario.colocated:
        return _build_colocated(scenario, n, s, kappa0)
    ch = scenario.channel
    ops = scenario.operators
    access = scenario.access_sets[n]
    group = sorted(scenario.group_of(k))
    lam_access = sum(ops[m].bs_density for m in access)
    scal = _scalars(scenario, k, s, ops[k].bs_density, 1.0 / math.sqrt(math.pi * lam_access))

    voids = []
    for m in sorted(access):
        for p in LINKS:
            c, e = exclusion_coefficients(scenario, k, s, m, p)
            voids.append([ops[m].bs_density, 1.0 if p is Link.LOS else 0.0, c, e])

    terms = []
    for m in group:
        lam = ops[m].bs_density
        if kappa0 is not None:
            lam *= 1.0 - kappa0[m]
        for p in LINKS:
            if m in access:
                c, e = exclusion_coefficients(scenario, k, s, m, p)
            else:
                c, e = 0.0, 1.0
            terms.append([lam, ch.alpha(p), 1.0 if p is Link.LOS else 0.0, c, e, 1.0,
                          ch.gain(p) * ops[m].tx_power_w, 0.0])
    return ServingPlan(n, k, s, scal, np.array(voids, dtype=float),
                       np.array(terms, dtype=float).reshape(-1, T_COEF + 2), np.zeros((0, 2)))


def _build_colocated(scenario: Scenario, n: int, s: Link, kappa0) -> ServingPlan:
    ch = scenario.channel
    ops = scenario.operators
    lam = ops[n].bs_density
    group = sorted(scenario.group_of(n))
    M = len(group)
    scal = _scalars(scenario, n, s, lam, 1.0 / math.sqrt(math.pi * lam))
    kap = np.zeros(scenario.n_operators) if kappa0 is None else np.asarray(kappa0, dtype=float)

    voids = []
    for p in LINKS:
        c = (ch.gain(p) / ch.gain(s)) ** (1.0 / ch.alpha(p))
        voids.append([lam, 1.0 if p is Link.LOS else 0.0, c, ch.alpha(s) / ch.alpha(p)])

    terms = []
    for p in LINKS:
        c = (ch.gain(p) / ch.gain(s)) ** (1.0 / ch.alpha(p))
        row = [lam, ch.alpha(p), 1.0 if p is Link.LOS else 0.0, c, ch.alpha(s) / ch.alpha(p), float(M)]
        row += [ch.gain(p) * ops[m].tx_power_w for m in group]
        row += [kap[m] for m in group]
        terms.append(row)

    lead = [[ch.gain(s) * ops[m].tx_power_w, kap[m]] for m in group if m != n]
    return ServingPlan(n, n, s, scal, np.array(voids, dtype=float), np.array(terms, dtype=float),
                       np.array(lead, dtype=float).reshape(-1, 2))
