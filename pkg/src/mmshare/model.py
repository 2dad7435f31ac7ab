"""Domain types, unit conversion and the four canonical two-operator systems.

Everything inside the package runs in SI linear units (meters, Hz, watts,
BS per m^2).  dB, dBm and per-km^2 values only appear at the boundary, via
the helpers below and the config parser.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

BOLTZMANN_NOISE_DBM_HZ = -174.0


def db_to_lin(x):
    return np.power(10.0, np.asarray(x, dtype=float) / 10.0)[()]


def lin_to_db(x):
    return (10.0 * np.log10(np.asarray(x, dtype=float)))[()]


def dbm_to_w(x):
    return db_to_lin(x) * 1e-3


def w_to_dbm(x):
    return lin_to_db(x) + 30.0


def per_km2(x: float) -> float:
    """Density given per km^2 -> per m^2."""
    return x * 1e-6


class Link(enum.Enum):
    LOS = "L"
    NLOS = "N"

    @property
    def other(self) -> "Link":
        return Link.NLOS if self is Link.LOS else Link.LOS


class AntennaKind(enum.Enum):
    FLAT_TOP = "flat_top"
    PARABOLIC_3GPP = "parabolic_3gpp"


class SystemKind(enum.Enum):
    SYS1 = 1  # closed access, exclusive licenses
    SYS2 = 2  # open access, full sharing
    SYS3 = 3  # closed access, full sharing
    SYS4 = 4  # co-located sites, closed access, full sharing

    @classmethod
    def parse(cls, value) -> "SystemKind":
        if isinstance(value, cls):
            return value
        s = str(value).strip().lower().replace("system", "sys").replace(" ", "")
        if s.startswith("sys"):
            s = s[3:]
        return cls(int(s))


@dataclass(frozen=True)
class ChannelParams:
    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    gain_los_db: float = -60.0
    gain_nlos_db: float = -70.0
    carrier_ghz: float = 28.0
    noise_density_dbm_hz: float = BOLTZMANN_NOISE_DBM_HZ
    noise_figure_db: float = 10.0

    def alpha(self, link: Link) -> float:
        return self.alpha_los if link is Link.LOS else self.alpha_nlos

    def gain(self, link: Link) -> float:
        """Linear pathloss gain C_s."""
        return 10.0 ** ((self.gain_los_db if link is Link.LOS else self.gain_nlos_db) / 10.0)

    @property
    def noise_psd_w_hz(self) -> float:
        return 10.0 ** ((self.noise_density_dbm_hz + self.noise_figure_db) / 10.0) * 1e-3

    def shifted(self, offset_db: float) -> "ChannelParams":
        """Same channel with both pathloss gains moved by ``offset_db``."""
        return replace(self, gain_los_db=self.gain_los_db + offset_db,
                       gain_nlos_db=self.gain_nlos_db + offset_db)


@dataclass(frozen=True)
class AntennaPattern:
    g_main_db: float = 18.0
    g_side_db: float = -2.0
    half_beamwidth_rad: float = math.radians(10.0)
    kind: AntennaKind = AntennaKind.FLAT_TOP
    # parabolic pattern only; None -> 2 * half beamwidth
    theta_3db_rad: float | None = None
    max_attenuation_db: float = 20.0

    @property
    def g_main(self) -> float:
        return 10.0 ** (self.g_main_db / 10.0)

    @property
    def g_side(self) -> float:
        return 0.0 if math.isinf(self.g_side_db) and self.g_side_db < 0 else 10.0 ** (self.g_side_db / 10.0)

    @property
    def aligned_fraction(self) -> float:
        """Probability that a uniformly oriented interferer points at the user."""
        return self.half_beamwidth_rad / math.pi

    @property
    def theta_3db(self) -> float:
        return self.theta_3db_rad if self.theta_3db_rad is not None else 2.0 * self.half_beamwidth_rad


@dataclass(frozen=True)
class BlockageModel:
    beta: float = 0.007

    def los_probability(self, x):
        return np.exp(-self.beta * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class OperatorParams:
    bs_density: float = per_km2(30.0)
    user_density: float = per_km2(200.0)
    tx_power_dbm: float = 26.0
    licensed_bw_hz: float = 100e6

    @property
    def tx_power_w(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class TierRef:
    operator: int
    link: Link


@dataclass(frozen=True)
class Scenario:
    operators: tuple[OperatorParams, ...]
    channel: ChannelParams = field(default_factory=ChannelParams)
    antenna: AntennaPattern = field(default_factory=AntennaPattern)
    blockage: BlockageModel = field(default_factory=BlockageModel)
    access_sets: tuple[frozenset[int], ...] = ()
    sharing_groups: tuple[frozenset[int], ...] = ()
    colocated: bool = False
    partial_loading: bool = False
    interference_limited: bool = False

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        object.__setattr__(self, "access_sets", tuple(frozenset(s) for s in self.access_sets))
        object.__setattr__(self, "sharing_groups", tuple(frozenset(g) for g in self.sharing_groups))

    @property
    def n_operators(self) -> int:
        return len(self.operators)

    def group_of(self, k: int) -> frozenset[int]:
        """Sharing group Q_k (the operators interfering in k's band)."""
        for g in self.sharing_groups:
            if k in g:
                return g
        raise ScenarioError(f"operator {k} is not in any sharing group")

    def bandwidth(self, k: int) -> float:
        """Pooled bandwidth W_k available to operator k, Hz."""
        return sum(self.operators[m].licensed_bw_hz for m in self.group_of(k))

    def noise_power(self, k: int) -> float:
        if self.interference_limited:
            return 0.0
        return self.channel.noise_psd_w_hz * self.bandwidth(k)

    def accessible(self, n: int) -> list[int]:
        return sorted(self.access_sets[n])

    def with_operators(self, operators: Sequence[OperatorParams]) -> "Scenario":
        return replace(self, operators=tuple(operators))

    def with_beamwidth(self, half_beamwidth_rad: float) -> "Scenario":
        return replace(self, antenna=replace(self.antenna, half_beamwidth_rad=half_beamwidth_rad))

    def with_licensed_bw(self, bw_hz: float) -> "Scenario":
        return self.with_operators([replace(o, licensed_bw_hz=bw_hz) for o in self.operators])

    def require_valid(self) -> "Scenario":
        problems = validate(self)
        if problems:
            raise ScenarioError("; ".join(problems))
        return self


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class DistributionCurve:
    """Sampled CCDF: ``probabilities[i] = P(X > thresholds[i])``."""

    thresholds: np.ndarray
    probabilities: np.ndarray
    stderr: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "thresholds", np.asarray(self.thresholds, dtype=float))
        object.__setattr__(self, "probabilities", np.asarray(self.probabilities, dtype=float))
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))
        if self.thresholds.shape != self.probabilities.shape:
            raise ValueError("thresholds and probabilities differ in length")

    def violations(self, slack: float = 1e-9) -> list[str]:
        out = []
        p = self.probabilities
        if np.any(np.diff(self.thresholds) <= 0):
            out.append("thresholds must be strictly ascending")
        if np.any((p < -slack) | (p > 1 + slack)) or not np.all(np.isfinite(p)):
            out.append("probabilities must lie in [0, 1]")
        if np.any(np.diff(p) > slack):
            out.append("CCDF must be non-increasing")
        return out

    def is_valid_ccdf(self, slack: float = 1e-9) -> bool:
        return not self.violations(slack)

    def __len__(self):
        return len(self.thresholds)


def validate(scenario: Scenario) -> list[str]:
    """List every violated invariant; an empty list means the scenario is usable."""
    v: list[str] = []
    M = scenario.n_operators
    ch, ant = scenario.channel, scenario.antenna

    if M < 1:
        v.append("operators: at least one operator is required")
    for i, op in enumerate(scenario.operators):
        for name in ("bs_density", "user_density", "licensed_bw_hz"):
            val = getattr(op, name)
            if not (math.isfinite(val) and val > 0):
                v.append(f"operator.{i + 1}.{name}: must be strictly positive")
        if not math.isfinite(op.tx_power_dbm):
            v.append(f"operator.{i + 1}.tx_power_dbm: must be finite")

    if not ch.alpha_los >= 2:
        v.append("channel.alpha_los: pathloss exponent must be >= 2")
    if not ch.alpha_nlos >= ch.alpha_los:
        v.append("channel.alpha_nlos: must be >= alpha_los")
    if not (math.isfinite(ch.gain_los_db) and math.isfinite(ch.gain_nlos_db)):
        v.append("channel.gain_*_db: pathloss gains must be finite")
    if not ch.noise_density_dbm_hz < 0:
        v.append("channel.noise_density_dbm_hz: must be below 0 dBm/Hz")

    if not ant.half_beamwidth_rad > 0:
        v.append("antenna.half_beamwidth: half beamwidth must be positive")
    elif ant.half_beamwidth_rad > math.pi + 1e-12:
        v.append("antenna.half_beamwidth: must not exceed pi")
    if not ant.g_main_db > ant.g_side_db:
        v.append("antenna.g_main_db: main-lobe gain must exceed side-lobe gain")

    if not scenario.blockage.beta > 0:
        v.append("blockage.beta: must be positive")

    if len(scenario.access_sets) != M:
        v.append("access: one access set per operator is required")
    else:
        for n, s in enumerate(scenario.access_sets):
            if n not in s:
                v.append(f"access.{n + 1}: an operator must be able to access itself")
            if any(not 0 <= m < M for m in s):
                v.append(f"access.{n + 1}: refers to an unknown operator")

    seen: dict[int, int] = {}
    partition_ok = True
    for gi, g in enumerate(scenario.sharing_groups):
        if not g:
            partition_ok = False
        for m in g:
            if m in seen or not 0 <= m < M:
                partition_ok = False
            seen[m] = gi
    if not partition_ok or set(seen) != set(range(M)):
        v.append("sharing_groups: not a partition of the operators")

    if scenario.colocated:
        dens = {op.bs_density for op in scenario.operators}
        if len(dens) > 1:
            v.append("colocated: all operators must have equal bs_density")
        if len(scenario.access_sets) == M and any(s != {n} for n, s in enumerate(scenario.access_sets)):
            v.append("colocated: co-located geometry supports closed access only")
    return v


def make_system_preset(kind, operators: Iterable[OperatorParams] | None = None, *,
                       channel: ChannelParams | None = None,
                       antenna: AntennaPattern | None = None,
                       blockage: BlockageModel | None = None,
                       partial_loading: bool = False,
                       interference_limited: bool = False) -> Scenario:
    """Build System 1-4 over the given operators (default: two identical ones)."""
    kind = SystemKind.parse(kind)
    ops = tuple(operators) if operators is not None else (OperatorParams(), OperatorParams())
    M = len(ops)
    everyone = frozenset(range(M))
    if kind is SystemKind.SYS1:
        access = tuple(frozenset({n}) for n in range(M))
        groups = tuple(frozenset({n}) for n in range(M))
    elif kind is SystemKind.SYS2:
        access = tuple(everyone for _ in range(M))
        groups = (everyone,)
    else:
        access = tuple(frozenset({n}) for n in range(M))
        groups = (everyone,)
    if kind is SystemKind.SYS4 and len({o.bs_density for o in ops}) > 1:
        raise ScenarioError("System 4 needs equal BS densities across operators")
    return Scenario(
        operators=ops,
        channel=channel or ChannelParams(),
        antenna=antenna or AntennaPattern(),
        blockage=blockage or BlockageModel(),
        access_sets=access,
        sharing_groups=groups,
        colocated=kind is SystemKind.SYS4,
        partial_loading=partial_loading,
        interference_limited=interference_limited,
    )
