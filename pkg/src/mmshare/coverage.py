"""SINR and rate coverage, the closed-form interference-limited special cases,
and the inverse problems built on them (rate quantiles, required bandwidth)."""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np

from . import _accel
from ._plan import LINKS, build_plan
from .assoc import LoadModel, load_model
from .interference import INNER_SPEC
from .model import (AntennaPattern, ChannelParams, DistributionCurve, Link, OperatorParams, Scenario,
                    make_system_preset)
from .quad import NoBracket, NonConvergence, QuadSpec, find_root

log = logging.getLogger(__name__)

OUTER_SPEC = QuadSpec(rel_tol=1e-7, abs_tol=1e-12, max_depth=40)
DEFAULT_SINR_DB = np.arange(-30.0, 51.0, 1.0)
SOLVER_RTOL = 1e-4
_T_MAX = 1e300


def _idle(scenario: Scenario, load: LoadModel | None):
    if not scenario.partial_loading:
        return None
    if load is None:
        load = load_model(scenario)
    return load.idle_prob


def tier_coverage(scenario: Scenario, n: int, k: int, s: Link, T, load: LoadModel | None = None,
                  *, inner: QuadSpec = INNER_SPEC, outer: QuadSpec = OUTER_SPEC) -> np.ndarray:
    """P^c_{ks}(T): coverage jointly with being served by tier {k, s} (T linear)."""
    T = np.minimum(np.atleast_1d(np.asarray(T, dtype=float)), _T_MAX)
    plan = build_plan(scenario, n, k, s, _idle(scenario, load))
    vals, ok = _accel.kernels().coverage(plan, T, inner, outer)
    if not np.all(ok):
        bad = T[~ok]
        raise NonConvergence(f"coverage integral failed for k={k}, s={s.name}, T={bad[:3].tolist()}")
    return vals


def operator_coverage(scenario: Scenario, T, user_operator: int = 0,
                      load: LoadModel | None = None) -> dict[int, np.ndarray]:
    """P^c_k(T) for every accessible operator k (summed over LOS/NLOS)."""
    scenario.require_valid()
    if scenario.partial_loading and load is None:
        load = load_model(scenario)
    ks = [user_operator] if scenario.colocated else scenario.accessible(user_operator)
    return {k: sum(tier_coverage(scenario, user_operator, k, s, T, load) for s in LINKS) for k in ks}


def sinr_coverage(scenario: Scenario, thresholds_db=None, user_operator: int = 0,
                  load: LoadModel | None = None) -> DistributionCurve:
    """SINR CCDF of a typical user of ``user_operator`` on a dB threshold grid.

    Co-located scenarios are routed to :func:`sinr_coverage_colocated`.
    """
    if scenario.colocated:
        return sinr_coverage_colocated(scenario, thresholds_db, user_operator, load)
    th = DEFAULT_SINR_DB if thresholds_db is None else np.asarray(thresholds_db, dtype=float)
    parts = operator_coverage(scenario, 10.0 ** (th / 10.0), user_operator, load)
    p = np.clip(sum(parts.values()), 0.0, 1.0)
    return DistributionCurve(th, p, label="analytical")


def sinr_coverage_colocated(scenario: Scenario, thresholds_db=None, user_operator: int = 0,
                            load: LoadModel | None = None) -> DistributionCurve:
    if not scenario.colocated:
        raise ValueError("scenario is not co-located")
    th = DEFAULT_SINR_DB if thresholds_db is None else np.asarray(thresholds_db, dtype=float)
    parts = operator_coverage(scenario, 10.0 ** (th / 10.0), user_operator, load)
    return DistributionCurve(th, np.clip(parts[user_operator], 0.0, 1.0), label="analytical")


def _rate_ccdf(scenario: Scenario, user_operator: int, load: LoadModel) -> Callable[[np.ndarray], np.ndarray]:
    ks = [user_operator] if scenario.colocated else scenario.accessible(user_operator)
    plans = {k: [build_plan(scenario, user_operator, k, s, load.idle_prob if scenario.partial_loading else None)
                 for s in LINKS] for k in ks}
    kern = _accel.kernels()

    def ccdf(rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        total = np.zeros(rho.size)
        for k in ks:
            factor = load.mean_load[k] / scenario.bandwidth(k)
            with np.errstate(over="ignore"):
                T = np.minimum(np.exp2(rho * factor) - 1.0, _T_MAX)
            for plan in plans[k]:
                vals, ok = kern.coverage(plan, T, INNER_SPEC, OUTER_SPEC)
                if not np.all(ok):
                    raise NonConvergence(f"rate coverage failed for k={k}, s={plan.link.name}")
                total += vals
        return np.clip(total, 0.0, 1.0)

    return ccdf


def rate_coverage(scenario: Scenario, rates_bps, user_operator: int = 0,
                  load: LoadModel | None = None) -> DistributionCurve:
    """R^c(rho) = sum_k P^c_k(2^{rho N^u_k / W_k} - 1)."""
    scenario.require_valid()
    load = load or load_model(scenario)
    rates = np.asarray(rates_bps, dtype=float)
    return DistributionCurve(rates, _rate_ccdf(scenario, user_operator, load)(rates), label="analytical")


def quantile_of_ccdf(ccdf: Callable, level: float, hi: float, rtol: float = SOLVER_RTOL) -> float:
    """Smallest-bracket solution of ccdf(rho) = level for a non-increasing ccdf with ccdf(0)=1."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    g = lambda r: float(np.asarray(ccdf(r)).ravel()[0]) - level  # noqa: E731
    lo = 0.0
    for _ in range(200):
        if g(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NoBracket("CCDF never drops below the requested level")
    return find_root(g, lo, hi, tol=1e-12 * hi, rtol=rtol)


def rate_percentile(scenario: Scenario, q: float, user_operator: int = 0,
                    load: LoadModel | None = None) -> float:
    """Rate exceeded by a fraction 1-q of users (q=0.5 is the median)."""
    scenario.require_valid()
    load = load or load_model(scenario)
    ccdf = _rate_ccdf(scenario, user_operator, load)
    hi = scenario.bandwidth(user_operator) / load.mean_load[user_operator]
    return quantile_of_ccdf(ccdf, 1.0 - q, hi)


def median_rate(scenario: Scenario | None = None, user_operator: int = 0,
                load: LoadModel | None = None, *, ccdf: Callable | None = None,
                hi: float | None = None) -> float:
    """Median per-user rate in bits/s.

    Passing ``ccdf`` (a callable rho -> R^c(rho)) bypasses the engine.
    """
    if ccdf is not None:
        return quantile_of_ccdf(ccdf, 0.5, hi or 1.0)
    return rate_percentile(scenario, 0.5, user_operator, load)


def required_bandwidth(scenario_shared: Scenario, target_median: float, user_operator: int = 0,
                       load: LoadModel | None = None, *, max_bw_hz: float | None = None,
                       rtol: float = SOLVER_RTOL) -> float:
    """Smallest per-operator license (Hz) whose shared-license median rate meets the target.

    Both the pooled bandwidth and the noise power scale with the license;
    the mean load does not, so it is computed once.
    """
    if target_median <= 0:
        return 0.0
    base = scenario_shared.operators[user_operator].licensed_bw_hz
    max_bw_hz = max_bw_hz or 16.0 * base
    load = load or load_model(scenario_shared)

    cache: dict[float, float] = {}

    def med(bw):
        if bw not in cache:
            cache[bw] = median_rate(scenario_shared.with_licensed_bw(bw), user_operator, load)
        return cache[bw]

    hi = base
    while med(hi) < target_median:
        hi *= 2.0
        if hi > max_bw_hz:
            raise NoBracket(f"median rate stays below {target_median:.4g} bit/s up to {max_bw_hz:.4g} Hz")
    lo = hi / 2.0
    while med(lo) >= target_median:
        hi, lo = lo, lo / 2.0
        if lo < 1.0:
            return hi
    if not med(lo) <= med(hi):
        raise RuntimeError("median rate is not increasing in bandwidth on the bracket")
    return find_root(lambda bw: med(bw) - target_median, lo, hi, tol=1e-9 * hi, rtol=rtol)


def corollary1_coverage(n_ops: int, theta_b: float, T):
    """Closed-form coverage: n identical operators, shared license, alpha=4, G2=0, no noise."""
    if n_ops < 1:
        raise ValueError("n_ops must be >= 1")
    T = np.asarray(T, dtype=float)
    with np.errstate(divide="ignore"):
        sq = np.sqrt(T)
        bracket = n_ops * math.pi / 2.0 - np.arctan(1.0 / sq)
    return (1.0 / (1.0 + theta_b / math.pi * sq * bracket))[()]


def corollary2_rate(n_ops: int, theta_b: float, rho_prime):
    """Closed-form rate coverage for the same setting; rho' = rho N^u / B."""
    rho_prime = np.asarray(rho_prime, dtype=float)
    T = np.exp2(rho_prime / n_ops) - 1.0
    return corollary1_coverage(n_ops, theta_b, T)


def corollary_scenario(n_ops: int, theta_b: float, beta: float = 0.007, *, alpha: float = 4.0,
                       gain_db: float = -60.0, operator: OperatorParams | None = None) -> Scenario:
    """Degenerate configuration the closed forms describe (as an engine scenario)."""
    from .model import BlockageModel
    op = operator or OperatorParams()
    return make_system_preset(
        "sys3", [op] * n_ops,
        channel=ChannelParams(alpha_los=alpha, alpha_nlos=alpha, gain_los_db=gain_db, gain_nlos_db=gain_db),
        antenna=AntennaPattern(g_side_db=-math.inf, half_beamwidth_rad=theta_b),
        blockage=BlockageModel(beta), interference_limited=True)
