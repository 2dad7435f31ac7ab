"""numba-compiled scalar kernels for the analytical engine.

Mirrors ``_kernels_numpy`` one for one; see ``_plan`` for the array layout
and ``quad`` for the acceptance rule shared by both integrators.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .quad import WG, WK, XK

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def gamma2(z):
    if z < 1e-2:
        acc = 0.0
        term = z * z
        for k in range(10):
            acc += term / (k + 2)
            term = -term * z / (k + 1)
        return acc
    return -math.expm1(-z) - z * math.exp(-z)


@njit(cache=True)
def ball(lam, los, beta, r):
    lb = TWO_PI * lam * gamma2(beta * r) / (beta * beta)
    if los > 0.5:
        return lb
    return math.pi * lam * r * r - lb


@njit(cache=True)
def eps(v, thf, g1, g2):
    e = 0.0
    if thf > 0.0:
        e += thf * g1 / (v + g1)
    if thf < 1.0 and g2 > 0.0:
        e += (1.0 - thf) * g2 / (v + g2)
    return e


@njit(cache=True)
def site_value(y, alpha, los, beta, row, nops, t, thf, g1, g2):
    ya = y ** alpha
    logprod = 0.0
    for m in range(nops):
        amp = t * row[6 + m]
        if amp <= 0.0:
            continue
        e = (1.0 - row[6 + nops + m]) * eps(ya / amp, thf, g1, g2)
        if e >= 1.0:
            logprod = -np.inf
            break
        logprod += math.log1p(-e)
    if los > 0.5:
        w = math.exp(-beta * y)
    else:
        w = -math.expm1(-beta * y)
    return w * (-math.expm1(logprod)) * y


@njit(cache=True)
def inner_scale(lower, alpha, los, beta, row, nops, t, g1, g2):
    cmax = 0.0
    for m in range(nops):
        if row[6 + m] > cmax:
            cmax = row[6 + m]
    amax = t * cmax * max(g1, g2)
    knee = amax ** (1.0 / alpha) if amax > 0.0 else 0.0
    if los > 0.5:
        return min(max(knee, 1.0), 1.0 / beta)
    return max(knee, lower, 1.0)


@njit(cache=True)
def term_integral(lower, alpha, los, beta, row, nops, t, thf, g1, g2, rtol, atol, maxdepth):
    """int_lower^inf w(y) [1 - prod_m (1 - (1-kap_m) eps_m(y))] y dy."""
    if t <= 0.0:
        return 0.0, 0.0, True
    L = inner_scale(lower, alpha, los, beta, row, nops, t, g1, g2)
    size = maxdepth + 2
    st_lo = np.empty(size)
    st_hi = np.empty(size)
    st_d = np.empty(size, dtype=np.int64)
    st_lo[0] = 0.0
    st_hi[0] = 1.0
    st_d[0] = 0
    top = 1
    total = 0.0
    errsum = 0.0
    ok = True
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        d = st_d[top]
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        kk = 0.0
        gg = 0.0
        for i in range(15):
            u = c + h * XK[i]
            om = 1.0 - u
            y = lower + L * u / om
            fv = site_value(y, alpha, los, beta, row, nops, t, thf, g1, g2) * (L / (om * om))
            kk += WK[i] * fv
            if i % 2 == 1:
                gg += WG[i // 2] * fv
        kk *= h
        gg *= h
        err = abs(kk - gg)
        tol = max(atol, rtol * abs(kk))
        if err <= tol or d >= maxdepth:
            if err > tol:
                ok = False
            total += kk
            errsum += err
        else:
            st_lo[top] = c
            st_hi[top] = hi
            st_d[top] = d + 1
            st_lo[top + 1] = lo
            st_hi[top + 1] = c
            st_d[top + 1] = d + 1
            top += 2
    return total, errsum, ok


@njit(cache=True)
def log_laplace_at(t, x, scal, terms, lead, rtol, atol, maxdepth):
    thf = scal[5]
    g1 = scal[3]
    g2 = scal[4]
    beta = scal[6]
    acc = 0.0
    ok = True
    for j in range(terms.shape[0]):
        row = terms[j]
        lower = row[3] * x ** row[4]
        nops = int(row[5])
        v, _, good = term_integral(lower, row[1], row[2], beta, row, nops, t, thf, g1, g2,
                                   rtol, atol, maxdepth)
        ok = ok and good
        acc -= TWO_PI * row[0] * v
    if t > 0.0:
        xa = x ** scal[0]
        for r in range(lead.shape[0]):
            amp = t * lead[r, 0]
            e = (1.0 - lead[r, 1]) * eps(xa / amp, thf, g1, g2)
            if e >= 1.0:
                return -np.inf, ok
            acc += math.log1p(-e)
    return acc, ok


@njit(cache=True)
def outer_value(x, T, scal, voids, terms, lead, rtol, atol, maxdepth):
    beta = scal[6]
    t = T * x ** scal[0] * scal[11]
    noise = t * scal[7]
    if noise > 745.0:
        return 0.0, True
    logv = 0.0
    for i in range(voids.shape[0]):
        logv -= ball(voids[i, 0], voids[i, 1], beta, voids[i, 2] * x ** voids[i, 3])
    if scal[9] > 0.5:
        w = math.exp(-beta * x)
    else:
        w = -math.expm1(-beta * x)
    pdf = TWO_PI * scal[8] * w * x * math.exp(logv)
    if pdf == 0.0:
        return 0.0, True
    ll, ok = log_laplace_at(t, x, scal, terms, lead, rtol, atol, maxdepth)
    return pdf * math.exp(ll - noise), ok


@njit(cache=True)
def coverage_one(T, scal, voids, terms, lead, irtol, iatol, idepth, ortol, oatol, odepth):
    L = scal[10]
    size = odepth + 2
    st_lo = np.empty(size)
    st_hi = np.empty(size)
    st_d = np.empty(size, dtype=np.int64)
    st_lo[0] = 0.0
    st_hi[0] = 1.0
    st_d[0] = 0
    top = 1
    total = 0.0
    ok = True
    while top > 0:
        top -= 1
        lo = st_lo[top]
        hi = st_hi[top]
        d = st_d[top]
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        kk = 0.0
        gg = 0.0
        for i in range(15):
            u = c + h * XK[i]
            om = 1.0 - u
            x = L * u / om
            fv, good = outer_value(x, T, scal, voids, terms, lead, irtol, iatol, idepth)
            ok = ok and good
            fv *= L / (om * om)
            kk += WK[i] * fv
            if i % 2 == 1:
                gg += WG[i // 2] * fv
        kk *= h
        gg *= h
        err = abs(kk - gg)
        tol = max(oatol, ortol * abs(kk))
        if err <= tol or d >= odepth:
            if err > tol:
                ok = False
            total += kk
        else:
            st_lo[top] = c
            st_hi[top] = hi
            st_d[top] = d + 1
            st_lo[top + 1] = lo
            st_hi[top + 1] = c
            st_d[top + 1] = d + 1
            top += 2
    return total, ok


@njit(cache=True, parallel=True)
def _coverage(Ts, scal, voids, terms, lead, irtol, iatol, idepth, ortol, oatol, odepth):
    n = Ts.size
    out = np.empty(n)
    oks = np.empty(n, dtype=np.bool_)
    for i in prange(n):
        out[i], oks[i] = coverage_one(Ts[i], scal, voids, terms, lead, irtol, iatol, idepth,
                                      ortol, oatol, odepth)
    return out, oks


@njit(cache=True)
def _log_laplace(ts, xs, scal, terms, lead, rtol, atol, maxdepth):
    n = ts.size
    out = np.empty(n)
    oks = np.empty(n, dtype=np.bool_)
    for i in range(n):
        out[i], oks[i] = log_laplace_at(ts[i], xs[i], scal, terms, lead, rtol, atol, maxdepth)
    return out, oks


@njit(cache=True)
def _term_integrals(lowers, ts, alpha, los, beta, row, thf, g1, g2, rtol, atol, maxdepth):
    n = lowers.size
    out = np.empty(n)
    oks = np.empty(n, dtype=np.bool_)
    nops = int(row[5])
    for i in range(n):
        out[i], _, oks[i] = term_integral(lowers[i], alpha, los, beta, row, nops, ts[i], thf, g1, g2,
                                          rtol, atol, maxdepth)
    return out, oks


# ---- uniform backend interface -------------------------------------------------------------

def coverage(plan, Ts, inner, outer):
    Ts = np.ascontiguousarray(Ts, dtype=float)
    return _coverage(Ts, plan.scal, plan.voids, plan.terms, plan.lead,
                     inner.rel_tol, inner.abs_tol, inner.max_depth,
                     outer.rel_tol, outer.abs_tol, outer.max_depth)


def log_laplace(plan, ts, xs, inner):
    ts = np.ascontiguousarray(ts, dtype=float)
    xs = np.ascontiguousarray(xs, dtype=float)
    return _log_laplace(ts, xs, plan.scal, plan.terms, plan.lead,
                        inner.rel_tol, inner.abs_tol, inner.max_depth)


def term_integrals(lowers, ts, alpha, los, beta, row, thf, g1, g2, spec):
    """Radial integrals for one term row at several (lower limit, t) pairs."""
    return _term_integrals(np.ascontiguousarray(lowers, dtype=float),
                           np.ascontiguousarray(ts, dtype=float), float(alpha), float(los),
                           float(beta), np.ascontiguousarray(row, dtype=float), float(thf),
                           float(g1), float(g2), spec.rel_tol, spec.abs_tol, spec.max_depth)


# ---- Monte Carlo per-drop reductions --------------------------------------------------------

@njit(cache=True)
def mc_serve_reduce(drop, n_drops, avg, rx, acc, grp, on):
    """Per drop: index of the strongest accessible BS and the summed interference
    from active BSs in the serving BS's sharing group (serving BS excluded)."""
    best = np.full(n_drops, -1, dtype=np.int64)
    bestp = np.full(n_drops, -1.0)
    for i in range(drop.size):
        d = drop[i]
        if acc[i] and avg[i] > bestp[d]:
            bestp[d] = avg[i]
            best[d] = i
    interf = np.zeros(n_drops)
    for i in range(drop.size):
        d = drop[i]
        b = best[d]
        if b >= 0 and i != b and on[i] and grp[i] == grp[b]:
            interf[d] += rx[i]
    return best, interf
