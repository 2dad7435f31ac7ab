"""Max-average-power association and the mean-load model.

A user of operator ``n`` attaches to the BS with the largest ``P_m C_s x^-alpha_s``
among operators in its access set.  Conditioned on the serving tier ``{k, s}``
at distance ``x``, every other accessible tier ``{m, p}`` must be empty inside
its exclusion radius ``D^{ks}_{mp}(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import geom
from ._plan import exclusion_coefficients
from .model import Link, Scenario, TierRef
from .quad import QuadSpec, integrate

# mean-cell-area correction and shape of the cell-load distribution
LOAD_AREA_FACTOR = 1.28
LOAD_SHAPE = 3.5

ASSOC_SPEC = QuadSpec(rel_tol=1e-11, abs_tol=1e-15)


@dataclass(frozen=True)
class AssociationContext:
    user_operator: int
    operator: int
    link: Link

    @property
    def tier(self) -> TierRef:
        return TierRef(self.operator, self.link)


@dataclass(frozen=True)
class LoadModel:
    """Per-operator associated-user ratio, mean load N^u and idle probability."""

    eta: np.ndarray
    mean_load: np.ndarray
    idle_prob: np.ndarray
    assoc: np.ndarray


def exclusion_radius(serving: TierRef, other: TierRef, x, scenario: Scenario,
                     user_operator: int | None = None):
    """D^{ks}_{mp}(x); zero for operators outside the user's access set."""
    n = serving.operator if user_operator is None else user_operator
    if other.operator not in scenario.access_sets[n]:
        return np.zeros_like(np.asarray(x, dtype=float))[()]
    if scenario.colocated:
        ch = scenario.channel
        c = (ch.gain(other.link) / ch.gain(serving.link)) ** (1.0 / ch.alpha(other.link))
        e = ch.alpha(serving.link) / ch.alpha(other.link)
    else:
        c, e = exclusion_coefficients(scenario, serving.operator, serving.link, other.operator, other.link)
    return (c * np.asarray(x, dtype=float) ** e)[()]


def serving_distance_pdf(ctx: AssociationContext, x, scenario: Scenario):
    """Density of the distance to the serving BS jointly with the event {serving tier = ctx}."""
    if scenario.colocated:
        return serving_distance_pdf_colocated(ctx.link, x, scenario, ctx.user_operator)
    n, k, s = ctx.user_operator, ctx.operator, ctx.link
    if k not in scenario.access_sets[n]:
        return np.zeros_like(np.asarray(x, dtype=float))[()]
    x = np.asarray(x, dtype=float)
    lam_k = scenario.operators[k].bs_density
    p = geom.los_probability(x, scenario.blockage)
    w = p if s is Link.LOS else 1.0 - p
    log_void = np.zeros_like(x)
    serving = TierRef(k, s)
    for m in scenario.accessible(n):
        for q in (Link.LOS, Link.NLOS):
            d = exclusion_radius(serving, TierRef(m, q), x, scenario, n)
            log_void = log_void - geom.intensity_ball(TierRef(m, q), d, scenario)
    return (2.0 * math.pi * lam_k * w * x * np.exp(log_void))[()]


def serving_distance_pdf_colocated(link: Link, x, scenario: Scenario, user_operator: int = 0):
    """Serving-distance density for co-located sites (one shared site PPP)."""
    x = np.asarray(x, dtype=float)
    lam = scenario.operators[user_operator].bs_density
    beta = scenario.blockage.beta
    ch = scenario.channel
    p = np.exp(-beta * x)
    w = p if link is Link.LOS else 1.0 - p
    other = link.other
    d = (ch.gain(other) / ch.gain(link)) ** (1.0 / ch.alpha(other)) * x ** (ch.alpha(link) / ch.alpha(other))
    own = geom.ball_los(lam, beta, x) if link is Link.LOS else geom.ball_nlos(lam, beta, x)
    cross = geom.ball_los(lam, beta, d) if other is Link.LOS else geom.ball_nlos(lam, beta, d)
    return (2.0 * math.pi * lam * w * x * np.exp(-own - cross))[()]


def tier_association_probability(ctx: AssociationContext, scenario: Scenario,
                                 spec: QuadSpec = ASSOC_SPEC) -> float:
    if ctx.operator not in scenario.access_sets[ctx.user_operator]:
        return 0.0
    lam = sum(scenario.operators[m].bs_density for m in scenario.access_sets[ctx.user_operator])
    scale = 1.0 / math.sqrt(math.pi * lam)
    val, _ = integrate(lambda x: serving_distance_pdf(ctx, x, scenario), 0.0, math.inf, spec, scale)
    return val


def association_probability(n: int, k: int, scenario: Scenario, spec: QuadSpec = ASSOC_SPEC) -> float:
    """A^n_k: probability that a user of operator n is served by operator k."""
    if k not in scenario.access_sets[n]:
        return 0.0
    if scenario.access_sets[n] == {k}:
        return 1.0
    return sum(tier_association_probability(AssociationContext(n, k, s), scenario, spec)
               for s in (Link.LOS, Link.NLOS))


def association_matrix(scenario: Scenario, spec: QuadSpec = ASSOC_SPEC) -> np.ndarray:
    M = scenario.n_operators
    A = np.zeros((M, M))
    for n in range(M):
        for k in scenario.access_sets[n]:
            A[n, k] = association_probability(n, k, scenario, spec)
    return A


def associated_user_ratio(k: int, scenario: Scenario, assoc: np.ndarray) -> float:
    """eta_k: density of users attached to operator k over its BS density."""
    ops = scenario.operators
    total = sum(ops[m].user_density * assoc[m, k]
                for m in range(scenario.n_operators) if k in scenario.access_sets[m])
    return total / ops[k].bs_density


def mean_load(k: int, scenario: Scenario, assoc: np.ndarray) -> float:
    """N^u_k = 1 + 1.28 * eta_k (tagged-cell mean load)."""
    return 1.0 + LOAD_AREA_FACTOR * associated_user_ratio(k, scenario, assoc)


def load_pmf(z, eta: float):
    """P(a BS has z associated users) for associated-user ratio eta."""
    z = np.asarray(z, dtype=float)
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if eta == 0:
        return np.where(z == 0, 1.0, 0.0)[()]
    a = LOAD_SHAPE
    logp = (a * math.log(a) + gammaln(z + a) - gammaln(z + 1) - gammaln(a)
            + z * math.log(eta) - (z + a) * math.log(a + eta))
    return np.exp(logp)[()]


def idle_probability(eta: float) -> float:
    """kappa(0) = (1 + eta/3.5)^-3.5."""
    return (1.0 + eta / LOAD_SHAPE) ** (-LOAD_SHAPE)


def load_model(scenario: Scenario, assoc: np.ndarray | None = None) -> LoadModel:
    if assoc is None:
        assoc = association_matrix(scenario)
    M = scenario.n_operators
    eta = np.array([associated_user_ratio(k, scenario, assoc) for k in range(M)])
    return LoadModel(eta=eta, mean_load=1.0 + LOAD_AREA_FACTOR * eta,
                     idle_prob=np.array([idle_probability(e) for e in eta]), assoc=assoc)


def thinned_densities(scenario: Scenario, load: LoadModel) -> np.ndarray:
    """Active-interferer densities lambda'_m = lambda_m (1 - kappa_m(0))."""
    lam = np.array([op.bs_density for op in scenario.operators])
    return lam * (1.0 - load.idle_prob)
