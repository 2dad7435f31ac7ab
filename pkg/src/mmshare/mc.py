"""Monte Carlo engine: explicit BS drops around a typical user at the origin.

Points are generated in concentric rings of fixed width.  Each ring of each
point layer draws from its own Philox stream keyed by (seed, block, layer,
ring), and every per-BS field is drawn for the whole ring before truncation
to the region radius, so enlarging the region leaves the inner points
untouched.  Drops are processed in fixed-size blocks; results do not depend
on how blocks are scheduled.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel
from .assoc import AssociationContext, exclusion_radius, load_model
from .model import AntennaKind, DistributionCurve, Link, Scenario, TierRef, db_to_lin

_SITE_TAG = 1 << 20
_GRID_RING = 1 << 20
_LEAD_TAG = (1 << 20) + 1


class Deployment(enum.Enum):
    INDEPENDENT_PPP = "ppp"
    COLOCATED = "colocated"
    SHIFTED_GRID = "grid"


class FadingKind(enum.Enum):
    RAYLEIGH = "rayleigh"
    NAKAGAMI = "nakagami"


@dataclass(frozen=True)
class Fading:
    """Small-scale power fading; Nakagami with m=inf means no fading."""

    kind: FadingKind = FadingKind.RAYLEIGH
    m: float = 1.0

    @classmethod
    def nakagami(cls, m: float) -> "Fading":
        if not m > 0:
            raise ValueError("Nakagami m must be positive")
        return cls(FadingKind.NAKAGAMI, float(m))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind is FadingKind.RAYLEIGH:
            return rng.standard_exponential(n)
        if math.isinf(self.m):
            rng.standard_exponential(n)  # keep stream positions aligned
            return np.ones(n)
        return rng.standard_gamma(self.m, n) / self.m


@dataclass(frozen=True)
class Shadowing:
    sigma_los_db: float = 5.2
    sigma_nlos_db: float = 7.6


@dataclass(frozen=True)
class McConfig:
    drops: int = 100_000
    region_radius: float | None = None
    seed: int = 0
    deployment: Deployment | None = None
    fading: Fading = field(default_factory=Fading)
    shadowing: Shadowing | None = None
    ring_width: float = 250.0
    block_size: int = 1000
    partial_loading: bool | None = None

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("drops must be >= 1")
        if self.region_radius is not None and not self.region_radius > 0:
            raise ValueError("region_radius must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.ring_width <= 0 or self.block_size < 1:
            raise ValueError("ring_width and block_size must be positive")


def default_region_radius(scenario: Scenario, user_operator: int = 0) -> float:
    """max(10/beta, 5 x mean nearest-BS distance of the accessible BSs)."""
    lam = sum(scenario.operators[m].bs_density for m in scenario.accessible(user_operator))
    return max(10.0 / scenario.blockage.beta, 5.0 * 0.5 / math.sqrt(lam))


def _stream(seed, block, tag, ring, kind) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block, tag, ring, kind])))


@dataclass
class _Points:
    drop: np.ndarray
    op: np.ndarray
    r: np.ndarray
    los: np.ndarray
    fade: np.ndarray
    phi: np.ndarray
    u_on: np.ndarray
    shadow: np.ndarray

    @staticmethod
    def concat(parts: list["_Points"]) -> "_Points":
        if not parts:
            e = np.empty(0)
            return _Points(e.astype(np.int64), e.astype(np.int64), e, e.astype(bool), e, e, e, e)
        return _Points(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                         ("drop", "op", "r", "los", "fade", "phi", "u_on", "shadow")))


def _layer(cfg: McConfig, deployment, block, tag, lam, R, beta, n_drops):
    """Yield (ring, drop, r, los, keep) for one layer of points, before truncation."""
    if deployment is Deployment.SHIFTED_GRID:
        rng = _stream(cfg.seed, block, tag, _GRID_RING, 0)
        a = 1.0 / math.sqrt(lam)
        K = int(math.ceil(R / a)) + 1
        g = np.arange(-K, K + 1) * a
        gx, gy = (v.ravel() for v in np.meshgrid(g, g))
        off = rng.random((n_drops, 2)) * a
        r = np.hypot(gx[None, :] + off[:, :1], gy[None, :] + off[:, 1:])
        drop = np.repeat(np.arange(n_drops), gx.size)
        r = r.ravel()
        los = rng.random(r.size) < np.exp(-beta * r)
        yield _GRID_RING, drop, r, los, r <= R
        return
    w = cfg.ring_width
    for j in range(int(math.ceil(R / w))):
        rng = _stream(cfg.seed, block, tag, j, 0)
        r0, r1 = j * w, (j + 1) * w
        counts = rng.poisson(lam * math.pi * (r1 * r1 - r0 * r0), n_drops)
        drop = np.repeat(np.arange(n_drops), counts)
        r = np.sqrt(r0 * r0 + rng.random(drop.size) * (r1 * r1 - r0 * r0))
        los = rng.random(drop.size) < np.exp(-beta * r)
        yield j, drop, r, los, r <= R


def _with_fields(cfg, block, m, ring, drop, r, los, keep) -> _Points:
    rng = _stream(cfg.seed, block, m, ring, 1)
    n = r.size
    fade = cfg.fading.draw(rng, n)
    phi = rng.uniform(-math.pi, math.pi, n)
    u_on = rng.random(n)
    shadow = rng.standard_normal(n)
    return _Points(drop[keep], np.full(int(keep.sum()), m, dtype=np.int64), r[keep], los[keep],
                   fade[keep], phi[keep], u_on[keep], shadow[keep])


def _deployment(scenario: Scenario, cfg: McConfig) -> Deployment:
    return cfg.deployment or (Deployment.COLOCATED if scenario.colocated else Deployment.INDEPENDENT_PPP)


def _block_points(scenario: Scenario, cfg: McConfig, block: int, n_drops: int, ops, R: float) -> _Points:
    dep = _deployment(scenario, cfg)
    beta = scenario.blockage.beta
    shared = dep is Deployment.COLOCATED or (dep is Deployment.SHIFTED_GRID and scenario.colocated)
    parts = []
    if shared:
        lam = scenario.operators[ops[0]].bs_density
        layer_dep = Deployment.SHIFTED_GRID if dep is Deployment.SHIFTED_GRID else Deployment.INDEPENDENT_PPP
        for ring, drop, r, los, keep in _layer(cfg, layer_dep, block, _SITE_TAG, lam, R, beta, n_drops):
            parts.extend(_with_fields(cfg, block, m, ring, drop, r, los, keep) for m in ops)
    else:
        for m in ops:
            lam = scenario.operators[m].bs_density
            for ring, drop, r, los, keep in _layer(cfg, dep, block, m, lam, R, beta, n_drops):
                parts.append(_with_fields(cfg, block, m, ring, drop, r, los, keep))
    return _Points.concat(parts)


def _antenna_gain(scenario: Scenario, phi: np.ndarray) -> np.ndarray:
    ant = scenario.antenna
    if ant.kind is AntennaKind.PARABOLIC_3GPP:
        att = np.minimum(12.0 * (phi / ant.theta_3db) ** 2, ant.max_attenuation_db)
        return db_to_lin(ant.g_main_db - att)
    return np.where(np.abs(phi) <= ant.half_beamwidth_rad, ant.g_main, ant.g_side)


def _avg_power(scenario: Scenario, cfg: McConfig, pts: _Points) -> np.ndarray:
    ch = scenario.channel
    P = np.array([op.tx_power_w for op in scenario.operators])[pts.op]
    C = np.where(pts.los, ch.gain(Link.LOS), ch.gain(Link.NLOS))
    a = np.where(pts.los, ch.alpha_los, ch.alpha_nlos)
    pw = P * C * pts.r ** (-a)
    if cfg.shadowing is not None:
        sig = np.where(pts.los, cfg.shadowing.sigma_los_db, cfg.shadowing.sigma_nlos_db)
        pw = pw * 10.0 ** (sig * pts.shadow / 10.0)
    return pw


@dataclass(frozen=True)
class DropSamples:
    """Per-drop outcome for a typical user; serving_operator is -1 if nothing is in range."""

    sinr: np.ndarray
    serving_operator: np.ndarray
    serving_los: np.ndarray
    serving_distance: np.ndarray
    signal: np.ndarray
    interference: np.ndarray
    noise: np.ndarray


def _relevant_ops(scenario: Scenario, n: int) -> list[int]:
    ops = set(scenario.accessible(n))
    for k in list(ops):
        ops |= set(scenario.group_of(k))
    return sorted(ops)


def _partial(scenario: Scenario, cfg: McConfig) -> bool:
    return scenario.partial_loading if cfg.partial_loading is None else cfg.partial_loading


def _simulate_block(scenario, cfg, block, n_drops, n, R, idle):
    ops = _relevant_ops(scenario, n)
    pts = _block_points(scenario, cfg, block, n_drops, ops, R)
    avg = _avg_power(scenario, cfg, pts)
    rx = avg * pts.fade * _antenna_gain(scenario, pts.phi)
    acc = np.isin(pts.op, sorted(scenario.access_sets[n]))
    gid = np.zeros(scenario.n_operators, dtype=np.int64)
    for i, g in enumerate(scenario.sharing_groups):
        gid[list(g)] = i
    grp = gid[pts.op]
    on = pts.u_on >= idle[pts.op] if idle is not None else np.ones(pts.r.size, dtype=bool)
    best, interf = _accel.kernels().mc_serve_reduce(pts.drop, n_drops, avg, rx, acc, grp, on)
    ok = best >= 0
    b = np.where(ok, best, 0)
    sig = np.where(ok, avg[b] * pts.fade[b] * scenario.antenna.g_main, 0.0) if b.size else np.zeros(n_drops)
    k = np.where(ok, pts.op[b], -1) if b.size else np.full(n_drops, -1)
    noise = np.array([scenario.noise_power(j) for j in range(scenario.n_operators)])
    nz = np.where(ok, noise[np.maximum(k, 0)], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(ok, sig / (interf + nz), 0.0)
    return (sinr, k, np.where(ok, pts.los[b], False) if b.size else np.zeros(n_drops, bool),
            np.where(ok, pts.r[b], np.inf) if b.size else np.full(n_drops, np.inf), sig, interf, nz)


def _blocks(cfg: McConfig):
    return [(i, min(cfg.block_size, cfg.drops - i * cfg.block_size))
            for i in range((cfg.drops + cfg.block_size - 1) // cfg.block_size)]


def _run_blocks(fn, cfg: McConfig):
    blocks = _blocks(cfg)
    workers = min(_accel.thread_cap(), len(blocks))
    if workers <= 1:
        return [fn(b, nd) for b, nd in blocks]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(lambda a: fn(*a), blocks))


def simulate(scenario: Scenario, cfg: McConfig | None = None, user_operator: int = 0) -> DropSamples:
    """Drop ``cfg.drops`` independent deployments and record the typical user's link."""
    scenario.require_valid()
    cfg = cfg or McConfig()
    R = cfg.region_radius or default_region_radius(scenario, user_operator)
    idle = load_model(scenario).idle_prob if _partial(scenario, cfg) else None
    res = _run_blocks(lambda b, nd: _simulate_block(scenario, cfg, b, nd, user_operator, R, idle), cfg)
    cols = [np.concatenate(c) for c in zip(*res)]
    return DropSamples(*cols)


def _ccdf(samples: np.ndarray, thresholds: np.ndarray):
    s = np.sort(samples)
    p = 1.0 - np.searchsorted(s, thresholds, side="right") / s.size
    return p, np.sqrt(p * (1.0 - p) / s.size)


def estimate_sinr_ccdf(scenario: Scenario, cfg: McConfig | None = None, thresholds_db=None,
                       user_operator: int = 0, samples: DropSamples | None = None) -> DistributionCurve:
    """Empirical P(SINR > T) with binomial standard errors."""
    from .coverage import DEFAULT_SINR_DB
    th = DEFAULT_SINR_DB if thresholds_db is None else np.asarray(thresholds_db, dtype=float)
    samples = samples or simulate(scenario, cfg, user_operator)
    p, se = _ccdf(samples.sinr, 10.0 ** (th / 10.0))
    return DistributionCurve(th, p, se, label="mc")


def estimate_rate_ccdf(scenario: Scenario, cfg: McConfig | None = None, rates_bps=None,
                       user_operator: int = 0, load=None,
                       samples: DropSamples | None = None) -> DistributionCurve:
    """Empirical rate CCDF with rate = W_k / N^u_k * log2(1 + SINR) (mean-load scaling)."""
    samples = samples or simulate(scenario, cfg, user_operator)
    rate = rate_samples(scenario, samples, load)
    rates = np.asarray(rates_bps, dtype=float)
    p, se = _ccdf(rate, rates)
    return DistributionCurve(rates, p, se, label="mc")


def rate_samples(scenario: Scenario, samples: DropSamples, load=None) -> np.ndarray:
    load = load or load_model(scenario)
    k = samples.serving_operator
    factor = np.array([scenario.bandwidth(j) / load.mean_load[j] for j in range(scenario.n_operators)])
    return np.where(k >= 0, factor[np.maximum(k, 0)] * np.log2(1.0 + samples.sinr), 0.0)


def estimate_association(scenario: Scenario, cfg: McConfig | None = None):
    """Empirical serving-operator frequencies; returns (freq[n, k], stderr[n, k])."""
    M = scenario.n_operators
    freq = np.zeros((M, M))
    for n in range(M):
        k = simulate(scenario, cfg, n).serving_operator
        freq[n] = np.bincount(k[k >= 0], minlength=M) / k.size
    cfg = cfg or McConfig()
    return freq, np.sqrt(freq * (1.0 - freq) / cfg.drops)


def _laplace_block(scenario, cfg, block, n_drops, serving, x, t, tiers, idle, R):
    n, k, s = serving.user_operator, serving.operator, serving.link
    ops = sorted(scenario.group_of(k))
    pts = _block_points(scenario, cfg, block, n_drops, ops, R)
    links = np.where(pts.los, 0, 1)
    keep = np.ones(pts.r.size, dtype=bool)
    st = TierRef(k, s)
    for m in ops:
        for li, p in enumerate((Link.LOS, Link.NLOS)):
            sel = (pts.op == m) & (links == li)
            if tiers is not None and TierRef(m, p) not in tiers:
                keep &= ~sel
                continue
            # co-located sites are excluded as a whole, by the user's own operator
            other = TierRef(n if scenario.colocated else m, p)
            d = float(exclusion_radius(st, other, x, scenario, n))
            keep &= ~(sel & (pts.r < d))
    if idle is not None:
        keep &= pts.u_on >= idle[pts.op]
    cfg_ns = replace(cfg, shadowing=None)
    rx = _avg_power(scenario, cfg_ns, pts) * pts.fade * _antenna_gain(scenario, pts.phi)
    interf = np.bincount(pts.drop[keep], weights=rx[keep], minlength=n_drops)
    if scenario.colocated:
        others = [m for m in ops if m != k and (tiers is None or TierRef(m, s) in tiers)]
        if others:
            rng = _stream(cfg.seed, block, _LEAD_TAG, 0, 1)
            ch = scenario.channel
            for m in others:
                fade = cfg.fading.draw(rng, n_drops)
                phi = rng.uniform(-math.pi, math.pi, n_drops)
                u_on = rng.random(n_drops)
                on = u_on >= idle[m] if idle is not None else True
                pw = scenario.operators[m].tx_power_w * ch.gain(s) * x ** (-ch.alpha(s))
                interf = interf + np.where(on, pw * fade * _antenna_gain(scenario, phi), 0.0)
    return np.exp(-t * interf)


def estimate_laplace(scenario: Scenario, cfg: McConfig | None, t: float, serving: AssociationContext,
                     x: float, *, tiers=None, idle_prob=None):
    """E[exp(-t I)] given a serving BS of tier ``serving`` pinned at distance x.

    Interferers from accessible operators respect the exclusion radii; in
    co-located scenarios the other operators' BSs on the serving site are
    included.  ``tiers`` restricts the sum to a subset of TierRefs and
    ``idle_prob`` (per operator) switches BSs off independently.
    Returns (mean, stderr).
    """
    cfg = cfg or McConfig()
    if t == 0:
        return 1.0, 0.0
    R = cfg.region_radius or default_region_radius(scenario, serving.user_operator)
    idle = None if idle_prob is None else np.broadcast_to(np.asarray(idle_prob, float), (scenario.n_operators,))
    tiers = None if tiers is None else set(tiers)
    vals = np.concatenate(_run_blocks(
        lambda b, nd: _laplace_block(scenario, cfg, b, nd, serving, x, t, tiers, idle, R), cfg))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
