"""Vectorized pure-numpy counterpart of ``_kernels_numba``.

Every nested integral is evaluated as one batch through
``quad.integrate_batch``: the outer integral over the serving distance hands
all of its abscissae to the inner radial integrals at once.
"""

from __future__ import annotations

import math

import numpy as np

from .quad import gamma2_lower, integrate_batch

TWO_PI = 2.0 * math.pi


def ball(lam, los, beta, r):
    lb = TWO_PI * lam * gamma2_lower(beta * r) / (beta * beta)
    if los > 0.5:
        return lb
    return math.pi * lam * r * r - lb


def eps(v, thf, g1, g2):
    e = np.zeros_like(v)
    if thf > 0.0:
        e = e + thf * g1 / (v + g1)
    if thf < 1.0 and g2 > 0.0:
        e = e + (1.0 - thf) * g2 / (v + g2)
    return e


def site_value(y, t, alpha, los, beta, row, thf, g1, g2):
    nops = int(row[5])
    ya = y ** alpha
    logprod = np.zeros_like(y)
    for m in range(nops):
        amp = t * row[6 + m]
        live = amp > 0.0
        v = np.divide(ya, amp, out=np.full_like(y, np.inf), where=live)
        e = np.where(live, (1.0 - row[6 + nops + m]) * eps(v, thf, g1, g2), 0.0)
        with np.errstate(divide="ignore"):
            logprod = logprod + np.log1p(-np.minimum(e, 1.0))
    w = np.exp(-beta * y) if los > 0.5 else -np.expm1(-beta * y)
    return w * (-np.expm1(logprod)) * y


def inner_scale(lower, t, alpha, los, beta, row, g1, g2):
    nops = int(row[5])
    cmax = max(0.0, float(np.max(row[6:6 + nops])))
    amax = t * cmax * max(g1, g2)
    knee = np.where(amax > 0.0, np.maximum(amax, 0.0) ** (1.0 / alpha), 0.0)
    if los > 0.5:
        return np.minimum(np.maximum(knee, 1.0), 1.0 / beta)
    return np.maximum(np.maximum(knee, lower), 1.0)


def _terms(lowers, ts, alpha, los, beta, row, thf, g1, g2, spec):
    lowers = np.asarray(lowers, dtype=float)
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(lowers.size)
    oks = np.ones(lowers.size, dtype=bool)
    live = np.flatnonzero(ts > 0.0)
    if live.size:
        lo, tl = lowers[live], ts[live]
        scale = inner_scale(lo, tl, alpha, los, beta, row, g1, g2)
        vals, _, ok = integrate_batch(
            lambda y, r: site_value(y, tl[r], alpha, los, beta, row, thf, g1, g2),
            lo, None, scale, spec)
        out[live] = vals
        oks[live] = ok
    return out, oks


def term_integrals(lowers, ts, alpha, los, beta, row, thf, g1, g2, spec):
    return _terms(lowers, ts, alpha, los, beta, row, thf, g1, g2, spec)


def log_laplace(plan, ts, xs, inner):
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    scal = plan.scal
    thf, g1, g2, beta = scal[5], scal[3], scal[4], scal[6]
    acc = np.zeros(ts.size)
    oks = np.ones(ts.size, dtype=bool)
    for row in plan.terms:
        lower = row[3] * xs ** row[4]
        v, ok = _terms(lower, ts, row[1], row[2], beta, row, thf, g1, g2, inner)
        oks &= ok
        acc = acc - TWO_PI * row[0] * v
    live = ts > 0.0
    if plan.lead.shape[0] and live.any():
        xa = xs ** scal[0]
        for coef, kap in plan.lead:
            amp = ts * coef
            v = np.divide(xa, amp, out=np.full_like(xa, np.inf), where=live)
            e = np.where(live, (1.0 - kap) * eps(v, thf, g1, g2), 0.0)
            with np.errstate(divide="ignore"):
                acc = acc + np.log1p(-np.minimum(e, 1.0))
    return acc, oks


def _outer_values(x, T, plan, inner, okrow, rows):
    scal = plan.scal
    beta = scal[6]
    t = T * x ** scal[0] * scal[11]
    noise = t * scal[7]
    logv = np.zeros_like(x)
    for lam, los, c, e in plan.voids:
        logv = logv - ball(lam, los, beta, c * x ** e)
    w = np.exp(-beta * x) if scal[9] > 0.5 else -np.expm1(-beta * x)
    with np.errstate(under="ignore"):
        pdf = TWO_PI * scal[8] * w * x * np.exp(logv)
    out = np.zeros_like(x)
    act = np.flatnonzero((noise <= 745.0) & (pdf != 0.0))
    if act.size:
        ll, ok = log_laplace(plan, t[act], x[act], inner)
        with np.errstate(under="ignore"):
            out[act] = pdf[act] * np.exp(ll - noise[act])
        np.logical_and.at(okrow, rows[act], ok)
    return out


def coverage(plan, Ts, inner, outer):
    Ts = np.asarray(Ts, dtype=float)
    okrow = np.ones(Ts.size, dtype=bool)
    vals, _, ok = integrate_batch(
        lambda x, r: _outer_values(x, Ts[r], plan, inner, okrow, r),
        np.zeros(Ts.size), None, plan.scal[10], outer)
    return vals, ok & okrow


def mc_serve_reduce(drop, n_drops, avg, rx, acc, grp, on):
    idx = np.flatnonzero(acc)
    top = np.full(n_drops, -1.0)
    np.maximum.at(top, drop[idx], avg[idx])
    hit = idx[avg[idx] == top[drop[idx]]]
    best = np.full(n_drops, drop.size, dtype=np.int64)
    np.minimum.at(best, drop[hit], hit)
    best[best == drop.size] = -1
    b = best[drop]
    live = (b >= 0) & on & (np.arange(drop.size) != b)
    live &= grp == grp[np.maximum(b, 0)]
    interf = np.bincount(drop[live], weights=rx[live], minlength=n_drops)
    return best, interf
