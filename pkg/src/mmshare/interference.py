"""Laplace transforms of the aggregate interference seen by the typical user.

Rayleigh fading plus a uniformly oriented flat-top beam turn each interferer
into a mixture over {aligned (G1), unaligned (G2)}; the PGFL of the tier PPP
then leaves a single radial integral per tier.  For co-located sites the
operators sharing a site enter one integral jointly.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._plan import LINKS, ServingPlan, build_plan, exclusion_coefficients
from .assoc import AssociationContext
from .model import Link, Scenario, TierRef
from .quad import NonConvergence, QuadSpec

INNER_SPEC = QuadSpec(rel_tol=1e-10, abs_tol=1e-14, max_depth=40)


class DivergentTail(ValueError):
    """The NLOS radial integral diverges for pathloss exponents <= 2."""


def _kernel(b, a, A, x, los, spec):
    if A < 0 or x < 0 or b <= 0:
        raise ValueError("need b > 0, A >= 0, x >= 0")
    if A == 0:
        return 0.0
    row = np.array([0.0, a, los, 0.0, 1.0, 1.0, A, 0.0])
    vals, oks = _accel.kernels().term_integrals([x], [1.0], a, los, b, row, 1.0, 1.0, 0.0, spec)
    if not oks[0]:
        raise NonConvergence(f"F kernel (b={b}, a={a}, A={A}, x={x}) did not converge")
    return float(vals[0])


def f_los_kernel(b: float, a: float, A: float, x: float, spec: QuadSpec = INNER_SPEC) -> float:
    """int_x^inf e^{-b y} A y^-a / (1 + A y^-a) y dy."""
    return _kernel(b, a, A, x, 1.0, spec)


def f_nlos_kernel(b: float, a: float, A: float, x: float, spec: QuadSpec = INNER_SPEC) -> float:
    """int_x^inf (1 - e^{-b y}) A y^-a / (1 + A y^-a) y dy."""
    if a <= 2:
        raise DivergentTail(f"NLOS kernel diverges for a={a} <= 2")
    return _kernel(b, a, A, x, 0.0, spec)


def _check(ok, what):
    if not np.all(ok):
        raise NonConvergence(f"{what}: radial integral did not converge")


def laplace_tier(tier: TierRef, t: float, x: float, serving: AssociationContext, scenario: Scenario,
                 *, idle_prob: float = 0.0, spec: QuadSpec = INNER_SPEC) -> float:
    """E[exp(-t I_{mp})] for tier {m,p} given the serving tier at distance x.

    ``idle_prob`` thins the tier's BSs (partial loading).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 1.0
    ch, ant = scenario.channel, scenario.antenna
    m, p = tier.operator, tier.link
    op = scenario.operators[m]
    lam = op.bs_density * (1.0 - idle_prob)
    if lam == 0:
        return 1.0
    if m in scenario.access_sets[serving.user_operator]:
        c, e = exclusion_coefficients(scenario, serving.operator, serving.link, m, p)
        lower = c * x ** e
    else:
        lower = 0.0
    row = np.array([lam, ch.alpha(p), 1.0 if p is Link.LOS else 0.0, 0.0, 1.0, 1.0,
                    ch.gain(p) * op.tx_power_w, 0.0])
    vals, oks = _accel.kernels().term_integrals([lower], [t], ch.alpha(p), row[2], scenario.blockage.beta,
                                                row, ant.aligned_fraction, ant.g_main, ant.g_side, spec)
    _check(oks, f"laplace_tier({tier})")
    return math.exp(-2.0 * math.pi * lam * vals[0])


def _plan_laplace(plan: ServingPlan, t, x, spec):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.broadcast_to(np.asarray(x, dtype=float), t.shape)
    if np.any(t < 0) or np.any(x <= 0):
        raise ValueError("need t >= 0 and x > 0")
    ll, oks = _accel.kernels().log_laplace(plan, t, x, spec)
    _check(oks, "laplace")
    return np.exp(ll)


def laplace_total(t, x, serving: AssociationContext, scenario: Scenario, *,
                  idle_prob=None, spec: QuadSpec = INNER_SPEC):
    """E[exp(-t I)] over every operator in the serving operator's sharing group.

    ``idle_prob`` (per-operator kappa(0)) applies independent thinning.
    """
    if scenario.colocated:
        return laplace_colocated(t, x, serving.link, scenario, serving.user_operator, spec=spec)
    plan = build_plan(scenario, serving.user_operator, serving.operator, serving.link, idle_prob)
    out = _plan_laplace(plan, t, x, spec)
    return out if np.ndim(t) else float(out[0])


def laplace_colocated(t, x, link: Link, scenario: Scenario, user_operator: int = 0, *,
                      spec: QuadSpec = INNER_SPEC):
    """Transform for co-located sites, all operators fully loaded."""
    return laplace_colocated_partial(t, x, link, scenario, None, user_operator, spec=spec)


def laplace_colocated_partial(t, x, link: Link, scenario: Scenario, idle_prob, user_operator: int = 0, *,
                              spec: QuadSpec = INNER_SPEC):
    """Co-located transform where each BS is silent with probability ``idle_prob``.

    ``idle_prob`` may be a scalar (same for every operator) or per-operator.
    """
    if not scenario.colocated:
        raise ValueError("scenario is not co-located")
    if idle_prob is not None and np.ndim(idle_prob) == 0:
        idle_prob = np.full(scenario.n_operators, float(idle_prob))
    plan = build_plan(scenario, user_operator, user_operator, link, idle_prob)
    out = _plan_laplace(plan, t, x, spec)
    return out if np.ndim(t) else float(out[0])


def tier_log_laplaces(t: float, x: float, serving: AssociationContext, scenario: Scenario,
                      spec: QuadSpec = INNER_SPEC) -> dict[TierRef, float]:
    """log L for each interfering tier separately (independent geometry)."""
    out = {}
    for m in sorted(scenario.group_of(serving.operator)):
        for p in LINKS:
            out[TierRef(m, p)] = math.log(laplace_tier(TierRef(m, p), t, x, serving, scenario, spec=spec))
    return out
