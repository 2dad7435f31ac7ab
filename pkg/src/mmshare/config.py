"""Line-oriented experiment configuration and the built-in presets.

A config is a flat list of ``dotted.key = value`` lines; ``#`` starts a
comment.  Operators are numbered from 1 in config files.  Keys under
``operator.all`` set every operator, ``operator.<i>`` overrides one.
Ranges are written ``start:step:stop`` (inclusive) and log grids
``log:start:stop:count``.  See README.md for the full key list.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import mc as mc_mod
from .model import (AntennaKind, AntennaPattern, BlockageModel, ChannelParams, OperatorParams, Scenario,
                    ScenarioError, SystemKind, make_system_preset, per_km2, validate)

BAND73_OFFSET_DB = -8.32


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None, source: str = "<config>"):
        where = source if line is None else f"{source}:{line}"
        if key:
            where += f": {key}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.key = key


class ExperimentKind(enum.Enum):
    SINR_CCDF = "sinr_ccdf"
    RATE_CCDF = "rate_ccdf"
    BEAMWIDTH_SWEEP = "beamwidth_sweep"
    REQUIRED_BANDWIDTH = "required_bandwidth"
    SHARING_GROUP_SWEEP = "sharing_group_sweep"
    DENSITY_SWEEP = "density_sweep"
    PARTIAL_LOADING = "partial_loading"
    BAND73 = "band73"


class Engine(enum.Enum):
    ANALYTICAL = "analytical"
    MC = "mc"
    BOTH = "both"

    @property
    def analytical(self) -> bool:
        return self is not Engine.MC

    @property
    def mc(self) -> bool:
        return self is not Engine.ANALYTICAL


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _positive(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise ValueError("must be positive")
    return v


def _count(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def parse_grid(s: str) -> np.ndarray:
    """``a:step:b`` (inclusive), ``log:a:b:n`` or a comma list."""
    s = s.strip()
    if s.startswith("log:"):
        a, b, n = s[4:].split(":")
        a, b, n = float(a), float(b), int(n)
        if a <= 0 or b <= a or n < 2:
            raise ValueError("log grid needs 0 < start < stop and count >= 2")
        return np.geomspace(a, b, n)
    if ":" in s:
        a, step, b = (float(v) for v in s.split(":"))
        if step <= 0 or b < a:
            raise ValueError("range needs step > 0 and stop >= start")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return a + step * np.arange(n)
    return np.array([float(v) for v in s.split(",")])


def _groups(s: str) -> list[set[int]]:
    return [{int(v) - 1 for v in g.split(",")} for g in s.split(";") if g.strip()]


def _systems(s: str) -> list[str]:
    out = []
    for v in s.split(","):
        v = v.strip().lower()
        if v != "custom":
            SystemKind.parse(v)
        out.append(v)
    return out


_OP_FIELDS = {
    "bs_density_per_km2": _positive,
    "user_density_per_km2": _positive,
    "tx_power_dbm": float,
    "bandwidth_mhz": _positive,
}

SCHEMA = {
    "experiment.kind": lambda s: ExperimentKind(s.strip().lower()),
    "experiment.systems": _systems,
    "experiment.engine": lambda s: Engine(s.strip().lower()),
    "experiment.seed": int,
    "experiment.user_operator": _count,
    "experiment.label": str,
    "operators.count": _count,
    "access.mode": lambda s: {"closed": "closed", "open": "open"}[s.strip().lower()],
    "sharing.groups": _groups,
    "scenario.colocated": _bool,
    "scenario.partial_loading": _bool,
    "scenario.interference_limited": _bool,
    "channel.alpha_los": float,
    "channel.alpha_nlos": float,
    "channel.gain_los_db": float,
    "channel.gain_nlos_db": float,
    "channel.carrier_ghz": _positive,
    "channel.noise_density_dbm_hz": float,
    "channel.noise_figure_db": float,
    "channel.gain_offset_db": float,
    "antenna.g_main_db": float,
    "antenna.g_side_db": float,
    "antenna.half_beamwidth_deg": float,
    "antenna.kind": lambda s: AntennaKind(s.strip().lower()),
    "antenna.theta_3db_deg": _positive,
    "antenna.max_attenuation_db": _positive,
    "blockage.beta_per_m": float,
    "mc.drops": _count,
    "mc.region_radius_m": _positive,
    "mc.deployment": lambda s: None if s.strip().lower() == "auto" else mc_mod.Deployment(s.strip().lower()),
    "mc.fading": lambda s: mc_mod.FadingKind(s.strip().lower()),
    "mc.nakagami_m": _positive,
    "mc.shadowing": _bool,
    "mc.sigma_los_db": float,
    "mc.sigma_nlos_db": float,
    "mc.ring_width_m": _positive,
    "grid.sinr_db": parse_grid,
    "grid.rate_mbps": parse_grid,
    "sweep.beamwidth_deg": parse_grid,
    "sweep.group_sizes": parse_grid,
    "sweep.density_per_km2": parse_grid,
    "sweep.density_operator": _count,
    "sweep.percentiles": parse_grid,
}

_OP_KEY = re.compile(r"^operator\.(all|\d+)\.([a-z0-9_]+)$")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, tuple[object, str, int]]:
    """Parse lines into {key: (value, raw, line)}; raises ConfigError with the line number."""
    out: dict[str, tuple[object, str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno, source=source)
        key, raw = (p.strip() for p in body.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, source=source)
        if key in out:
            raise ConfigError(f"duplicate key (first set on line {out[key][2]})", lineno, key, source)
        m = _OP_KEY.match(key)
        if m:
            conv = _OP_FIELDS.get(m.group(2))
        else:
            conv = SCHEMA.get(key)
        if conv is None:
            raise ConfigError("unknown key", lineno, key, source)
        try:
            value = conv(raw)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad value {raw!r} ({exc})", lineno, key, source) from None
        out[key] = (value, raw, lineno)
    return out


@dataclass
class ExperimentConfig:
    kind: ExperimentKind = ExperimentKind.SINR_CCDF
    systems: list[str] = field(default_factory=lambda: ["sys1", "sys2", "sys3", "sys4"])
    engine: Engine = Engine.ANALYTICAL
    seed: int = 0
    user_operator: int = 0
    label: str = ""
    base: Scenario | None = None
    mc: mc_mod.McConfig = field(default_factory=mc_mod.McConfig)
    sinr_db: np.ndarray = field(default_factory=lambda: np.arange(-30.0, 51.0, 1.0))
    rate_mbps: np.ndarray = field(default_factory=lambda: np.geomspace(1.0, 10_000.0, 81))
    beamwidth_deg: np.ndarray = field(default_factory=lambda: np.arange(5.0, 91.0, 5.0))
    group_sizes: np.ndarray = field(default_factory=lambda: np.arange(1.0, 11.0))
    density_per_km2: np.ndarray = field(default_factory=lambda: np.arange(5.0, 61.0, 5.0))
    density_operator: int = 1
    percentiles: np.ndarray = field(default_factory=lambda: np.array([25.0, 50.0, 75.0]))
    resolved: dict[str, str] = field(default_factory=dict)

    def scenario(self, system: str) -> Scenario:
        """The base scenario with the given system's access/sharing structure."""
        if system == "custom":
            return self.base
        b = self.base
        sc = make_system_preset(system, b.operators, channel=b.channel, antenna=b.antenna, blockage=b.blockage,
                                partial_loading=b.partial_loading, interference_limited=b.interference_limited)
        return sc


def _key_for(problem: str, cfg) -> str:
    """Config key most likely responsible for a validation finding."""
    field_ = problem.split(":", 1)[0].replace("sharing_groups", "sharing.groups")
    m = re.match(r"operator\.(\d+)\.(\w+)", field_)
    candidates = [field_]
    if m:
        candidates = [f"operator.{m.group(1)}.{m.group(2)}", f"operator.all.{m.group(2)}"]
    for c in candidates:
        for key in cfg:
            if key.startswith(c):
                return key
    return "experiment.systems"


def _get(cfg, key, default):
    return cfg[key][0] if key in cfg else default


def build_experiment(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a config; every problem is reported as ConfigError."""
    cfg = parse_config_text(text, source)

    def fail(msg, key=None):
        line = cfg[key][2] if key in cfg else None
        raise ConfigError(msg, line, key, source)

    n_ops = _get(cfg, "operators.count", 2)
    defaults = OperatorParams()
    base_op = {
        "bs_density_per_km2": defaults.bs_density * 1e6,
        "user_density_per_km2": defaults.user_density * 1e6,
        "tx_power_dbm": defaults.tx_power_dbm,
        "bandwidth_mhz": defaults.licensed_bw_hz / 1e6,
    }
    for f in _OP_FIELDS:
        base_op[f] = _get(cfg, f"operator.all.{f}", base_op[f])
    ops = []
    for i in range(1, n_ops + 1):
        v = {f: _get(cfg, f"operator.{i}.{f}", base_op[f]) for f in _OP_FIELDS}
        ops.append(OperatorParams(per_km2(v["bs_density_per_km2"]), per_km2(v["user_density_per_km2"]),
                                  v["tx_power_dbm"], v["bandwidth_mhz"] * 1e6))
    for key in cfg:
        m = _OP_KEY.match(key)
        if m and m.group(1) != "all" and not 1 <= int(m.group(1)) <= n_ops:
            fail(f"operator index out of range 1..{n_ops}", key)

    c0 = ChannelParams()
    channel = ChannelParams(
        alpha_los=_get(cfg, "channel.alpha_los", c0.alpha_los),
        alpha_nlos=_get(cfg, "channel.alpha_nlos", c0.alpha_nlos),
        gain_los_db=_get(cfg, "channel.gain_los_db", c0.gain_los_db),
        gain_nlos_db=_get(cfg, "channel.gain_nlos_db", c0.gain_nlos_db),
        carrier_ghz=_get(cfg, "channel.carrier_ghz", c0.carrier_ghz),
        noise_density_dbm_hz=_get(cfg, "channel.noise_density_dbm_hz", c0.noise_density_dbm_hz),
        noise_figure_db=_get(cfg, "channel.noise_figure_db", c0.noise_figure_db),
    ).shifted(_get(cfg, "channel.gain_offset_db", 0.0))
    a0 = AntennaPattern()
    theta3 = _get(cfg, "antenna.theta_3db_deg", None)
    antenna = AntennaPattern(
        g_main_db=_get(cfg, "antenna.g_main_db", a0.g_main_db),
        g_side_db=_get(cfg, "antenna.g_side_db", a0.g_side_db),
        half_beamwidth_rad=math.radians(_get(cfg, "antenna.half_beamwidth_deg", math.degrees(a0.half_beamwidth_rad))),
        kind=_get(cfg, "antenna.kind", a0.kind),
        theta_3db_rad=None if theta3 is None else math.radians(theta3),
        max_attenuation_db=_get(cfg, "antenna.max_attenuation_db", a0.max_attenuation_db),
    )
    blockage = BlockageModel(_get(cfg, "blockage.beta_per_m", BlockageModel().beta))

    if "access.mode" in cfg and _get(cfg, "access.mode", "closed") == "open":
        access = [set(range(n_ops)) for _ in range(n_ops)]
    else:
        access = [{i} for i in range(n_ops)]
    groups = _get(cfg, "sharing.groups", [{i} for i in range(n_ops)])
    base = Scenario(
        operators=tuple(ops), channel=channel, antenna=antenna, blockage=blockage,
        access_sets=tuple(frozenset(a) for a in access),
        sharing_groups=tuple(frozenset(g) for g in groups),
        colocated=_get(cfg, "scenario.colocated", False),
        partial_loading=_get(cfg, "scenario.partial_loading", False),
        interference_limited=_get(cfg, "scenario.interference_limited", False),
    )
    systems = _get(cfg, "experiment.systems", ["sys1", "sys2", "sys3", "sys4"])
    for s in systems:
        try:
            sc = ExperimentConfig(base=base).scenario(s)
        except ScenarioError as exc:
            fail(f"system {s}: {exc}", "experiment.systems")
        problems = validate(sc)
        if problems:
            fail(f"system {s}: " + "; ".join(problems), _key_for(problems[0], cfg))

    user = _get(cfg, "experiment.user_operator", 1) - 1
    if user >= n_ops:
        fail(f"user operator must be in 1..{n_ops}", "experiment.user_operator")

    fading = mc_mod.Fading()
    if _get(cfg, "mc.fading", mc_mod.FadingKind.RAYLEIGH) is mc_mod.FadingKind.NAKAGAMI:
        fading = mc_mod.Fading.nakagami(_get(cfg, "mc.nakagami_m", 10.0))
    shadow = None
    if _get(cfg, "mc.shadowing", False):
        s0 = mc_mod.Shadowing()
        shadow = mc_mod.Shadowing(_get(cfg, "mc.sigma_los_db", s0.sigma_los_db),
                                  _get(cfg, "mc.sigma_nlos_db", s0.sigma_nlos_db))
    seed = _get(cfg, "experiment.seed", 0)
    if seed < 0:
        fail("seed must be non-negative", "experiment.seed")
    mcc = mc_mod.McConfig(drops=_get(cfg, "mc.drops", 100_000), region_radius=_get(cfg, "mc.region_radius_m", None),
                          seed=seed, deployment=_get(cfg, "mc.deployment", None), fading=fading,
                          shadowing=shadow, ring_width=_get(cfg, "mc.ring_width_m", 250.0))

    exp = ExperimentConfig(
        kind=_get(cfg, "experiment.kind", ExperimentKind.SINR_CCDF), systems=systems,
        engine=_get(cfg, "experiment.engine", Engine.ANALYTICAL), seed=seed, user_operator=user,
        label=_get(cfg, "experiment.label", ""), base=base, mc=mcc,
        resolved={k: raw for k, (_, raw, _) in cfg.items()},
    )
    for key, attr in (("grid.sinr_db", "sinr_db"), ("grid.rate_mbps", "rate_mbps"),
                      ("sweep.beamwidth_deg", "beamwidth_deg"), ("sweep.group_sizes", "group_sizes"),
                      ("sweep.density_per_km2", "density_per_km2"), ("sweep.percentiles", "percentiles")):
        if key in cfg:
            setattr(exp, attr, cfg[key][0])
    exp.density_operator = _get(cfg, "sweep.density_operator", 2) - 1
    if exp.kind is ExperimentKind.DENSITY_SWEEP and exp.density_operator >= n_ops:
        fail("density operator out of range", "sweep.density_operator")
    if exp.kind is ExperimentKind.REQUIRED_BANDWIDTH and exp.engine.mc:
        fail("required_bandwidth supports the analytical engine only", "experiment.engine")
    if np.any((exp.beamwidth_deg <= 0) | (exp.beamwidth_deg > 180)):
        fail("beamwidths must lie in (0, 180] degrees", "sweep.beamwidth_deg")
    if np.any((exp.percentiles <= 0) | (exp.percentiles >= 100)):
        fail("percentiles must lie in (0, 100)", "sweep.percentiles")
    if exp.kind is ExperimentKind.SHARING_GROUP_SWEEP and (
            np.any(exp.group_sizes < 1) or np.any(exp.group_sizes > n_ops)):
        fail(f"group sizes must lie in 1..{n_ops}", "sweep.group_sizes")
    return exp


def resolved_text(exp: ExperimentConfig) -> str:
    """Config text that rebuilds ``exp`` (keys as given, sorted)."""
    return "".join(f"{k} = {v}\n" for k, v in sorted(exp.resolved.items()))


_COMMON = """\
operators.count = 2
operator.all.bs_density_per_km2 = 30
operator.all.user_density_per_km2 = 200
operator.all.tx_power_dbm = 26
operator.all.bandwidth_mhz = 100
channel.alpha_los = 2
channel.alpha_nlos = 4
channel.gain_los_db = -60
channel.gain_nlos_db = -70
channel.carrier_ghz = 28
antenna.half_beamwidth_deg = 10
blockage.beta_per_m = 0.007
experiment.systems = sys1,sys2,sys3,sys4
"""

PRESETS: dict[str, tuple[str, str]] = {
    "fig1": ("fig1: SINR coverage of the four systems, analysis vs simulation",
             "experiment.kind = sinr_ccdf\nexperiment.engine = both\n"),
    "fig2": ("fig2: rate coverage of the four systems",
             "experiment.kind = rate_ccdf\nexperiment.engine = analytical\n"),
    "fig3": ("fig3: rate coverage with grid deployment, 3GPP antenna and shadowing (simulation)",
             "experiment.kind = rate_ccdf\nexperiment.engine = mc\nmc.deployment = grid\n"
             "antenna.kind = parabolic_3gpp\nmc.shadowing = true\n"),
    "fig4": ("fig4: rate coverage with Nakagami m=10 fading (simulation)",
             "experiment.kind = rate_ccdf\nexperiment.engine = mc\nmc.fading = nakagami\nmc.nakagami_m = 10\n"),
    "fig5": ("fig5: median rate vs beamwidth",
             "experiment.kind = beamwidth_sweep\nexperiment.engine = analytical\nsweep.beamwidth_deg = 5:5:90\n"),
    "fig6": ("fig6: required shared bandwidth vs beamwidth against a 100 MHz exclusive license",
             "experiment.kind = required_bandwidth\nexperiment.engine = analytical\n"
             "experiment.systems = sys1,sys3\nsweep.beamwidth_deg = 5:5:45\n"),
    "fig7": ("fig7: rate coverage under partial loading, 30 users/km^2",
             "experiment.kind = partial_loading\nexperiment.engine = analytical\n"
             "operator.all.user_density_per_km2 = 30\nscenario.partial_loading = true\n"),
    "fig8": ("fig8: 73 GHz, 1 GHz bandwidth",
             "experiment.kind = band73\nexperiment.engine = analytical\nchannel.carrier_ghz = 73\n"
             f"channel.gain_offset_db = {BAND73_OFFSET_DB}\noperator.all.bandwidth_mhz = 1000\n"),
    "fig9": ("fig9: rate percentiles vs sharing-group size, 10 operators @50MHz",
             "experiment.kind = sharing_group_sweep\nexperiment.engine = analytical\noperators.count = 10\n"
             "operator.all.bandwidth_mhz = 50\nexperiment.systems = custom\nsweep.group_sizes = 1:1:10\n"
             "sweep.percentiles = 25,50,75\n"),
    "fig10": ("fig10: median rates vs the second operator's BS density, exclusive vs shared",
              "experiment.kind = density_sweep\nexperiment.engine = analytical\nexperiment.systems = sys1,sys3\n"
              "sweep.density_operator = 2\nsweep.density_per_km2 = 5:5:60\n"),
}


def preset_text(name: str, engine: Engine | None = None, seed: int | None = None) -> str:
    """Full config text for a preset, with optional engine/seed overrides."""
    if name not in PRESETS:
        raise KeyError(name)
    lines = {}
    for block in (_COMMON, PRESETS[name][1]):
        for line in block.splitlines():
            k, v = (p.strip() for p in line.split("=", 1))
            lines[k] = v
    if engine is not None:
        lines["experiment.engine"] = engine.value
    if seed is not None:
        lines["experiment.seed"] = str(seed)
    lines.setdefault("experiment.label", name)
    return "".join(f"{k} = {v}\n" for k, v in lines.items())


def list_presets() -> list[str]:
    return [desc for desc, _ in PRESETS.values()]


def with_groups_of_size(scenario: Scenario, q: int) -> Scenario:
    """Chunk operators 0..M-1 into consecutive sharing groups of size q (closed access)."""
    M = scenario.n_operators
    groups = tuple(frozenset(range(i, min(i + q, M))) for i in range(0, M, q))
    return replace(scenario, sharing_groups=groups, access_sets=tuple(frozenset({i}) for i in range(M)),
                   colocated=False)
