"""Command line experiment runner.

    mmshare list
    mmshare preset fig5 --engine analytical --out out/
    mmshare run my.cfg

Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import tempfile
import time
import traceback
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from . import __version__, _accel, coverage, mc
from .config import (ConfigError, Engine, ExperimentConfig, ExperimentKind, PRESETS, build_experiment,
                     list_presets, preset_text, resolved_text, with_groups_of_size)
from .interference import DivergentTail
from .model import OperatorParams, ScenarioError, per_km2
from .quad import NoBracket, NonConvergence

log = logging.getLogger("mmshare")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
_NUMERIC_ERRORS = (NonConvergence, NoBracket, DivergentTail, FloatingPointError, ZeroDivisionError)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    rows = [",".join(header)]
    for vals in zip(*columns):
        rows.append(",".join(_fmt(float(v)) for v in vals))
    return "\n".join(rows) + "\n"


class Outputs:
    """Collects CSV files and the gnuplot commands that draw them."""

    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []

    def curve(self, name: str, curve):
        cols = [curve.thresholds, curve.probabilities]
        header = ["threshold", "probability"]
        if curve.stderr is not None:
            header.append("stderr")
            cols.append(curve.stderr)
        self.table(name, header, cols)

    def table(self, name: str, header, cols):
        write_atomic(self.root / name, csv_text(header, cols))
        self.files.append(name)

    def gnuplot(self, title: str, xlabel: str, ylabel: str, logx: bool, series: list[tuple[str, int]]):
        lines = ["set datafile separator ','", "set key autotitle columnhead", "set grid",
                 f"set title '{title}'", f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
        if logx:
            lines.append("set logscale x")
        plots = [f"'{f}' using 1:{c} with linespoints title '{f[:-4]}:{c}'" for f, c in series]
        lines.append("plot " + ", \\\n     ".join(plots))
        write_atomic(self.root / "plot.gp", "\n".join(lines) + "\n")
        self.files.append("plot.gp")


def _samples(exp: ExperimentConfig, sc, user=None):
    return mc.simulate(sc, exp.mc, exp.user_operator if user is None else user)


def _run_sinr(exp, out: Outputs):
    series = []
    for s in exp.systems:
        sc = exp.scenario(s)
        if exp.engine.analytical:
            out.curve(f"{s}_analytical.csv", coverage.sinr_coverage(sc, exp.sinr_db, exp.user_operator))
            series.append((f"{s}_analytical.csv", 2))
        if exp.engine.mc:
            out.curve(f"{s}_mc.csv", mc.estimate_sinr_ccdf(sc, exp.mc, exp.sinr_db, exp.user_operator))
            series.append((f"{s}_mc.csv", 2))
    out.gnuplot("SINR coverage", "SINR threshold (dB)", "P(SINR > T)", False, series)


def _run_rate(exp, out: Outputs):
    rates = exp.rate_mbps * 1e6
    series = []
    names, engines, medians = [], [], []
    for s in exp.systems:
        sc = exp.scenario(s)
        if exp.engine.analytical:
            out.curve(f"{s}_rate_analytical.csv", coverage.rate_coverage(sc, rates, exp.user_operator))
            series.append((f"{s}_rate_analytical.csv", 2))
            names.append(s)
            engines.append("analytical")
            medians.append(coverage.median_rate(sc, exp.user_operator) / 1e6)
        if exp.engine.mc:
            smp = _samples(exp, sc)
            out.curve(f"{s}_rate_mc.csv", mc.estimate_rate_ccdf(sc, exp.mc, rates, exp.user_operator,
                                                                 samples=smp))
            series.append((f"{s}_rate_mc.csv", 2))
            names.append(s)
            engines.append("mc")
            medians.append(float(np.median(mc.rate_samples(sc, smp))) / 1e6)
    text = "system,engine,median_rate_mbps\n" + "".join(
        f"{n},{e},{_fmt(m)}\n" for n, e, m in zip(names, engines, medians))
    write_atomic(out.root / "medians.csv", text)
    out.files.append("medians.csv")
    out.gnuplot("Rate coverage", "rate threshold (bit/s)", "P(rate > rho)", True, series)


def _run_beamwidth(exp, out: Outputs):
    header, cols = ["beamwidth_deg"], [exp.beamwidth_deg]
    for s in exp.systems:
        for eng in ("analytical", "mc"):
            if not getattr(exp.engine, eng):
                continue
            vals = []
            for deg in exp.beamwidth_deg:
                sc = exp.scenario(s).with_beamwidth(math.radians(deg))
                if eng == "analytical":
                    vals.append(coverage.median_rate(sc, exp.user_operator) / 1e6)
                else:
                    vals.append(float(np.median(mc.rate_samples(sc, _samples(exp, sc)))) / 1e6)
            header.append(f"{s}_{eng}_mbps")
            cols.append(np.array(vals))
    out.table("median_vs_beamwidth.csv", header, cols)
    out.gnuplot("Median rate vs beamwidth", "half beamwidth (deg)", "median rate (Mbit/s)", False,
                [("median_vs_beamwidth.csv", i) for i in range(2, len(header) + 1)])


def _run_required_bw(exp, out: Outputs):
    if len(exp.systems) != 2:
        raise ConfigError("required_bandwidth needs exactly two systems: exclusive baseline, shared",
                          key="experiment.systems")
    req = []
    for deg in exp.beamwidth_deg:
        base = exp.scenario(exp.systems[0]).with_beamwidth(math.radians(deg))
        shared = exp.scenario(exp.systems[1]).with_beamwidth(math.radians(deg))
        target = coverage.median_rate(base, exp.user_operator)
        req.append(coverage.required_bandwidth(shared, target, exp.user_operator) / 1e6)
        log.info("beamwidth %.1f deg: %.2f MHz", deg, req[-1])
    out.table("required_bandwidth.csv", ["beamwidth_deg", "required_bw_mhz"], [exp.beamwidth_deg, np.array(req)])
    out.gnuplot("Required bandwidth", "half beamwidth (deg)", "bandwidth per operator (MHz)", False,
                [("required_bandwidth.csv", 2)])


def _run_groups(exp, out: Outputs):
    header = ["group_size"] + [f"p{int(q) if float(q).is_integer() else q}_{eng}_mbps"
                               for eng in ("analytical", "mc") if getattr(exp.engine, eng)
                               for q in exp.percentiles]
    rows = []
    for q in exp.group_sizes.astype(int):
        sc = with_groups_of_size(exp.base, int(q))
        row = []
        if exp.engine.analytical:
            row += [coverage.rate_percentile(sc, p / 100.0, exp.user_operator) / 1e6 for p in exp.percentiles]
        if exp.engine.mc:
            r = mc.rate_samples(sc, _samples(exp, sc))
            row += list(np.percentile(r, exp.percentiles) / 1e6)
        rows.append(row)
    cols = [exp.group_sizes] + [np.array(c) for c in zip(*rows)]
    out.table("percentiles_vs_group_size.csv", header, cols)
    out.gnuplot("Rate percentiles vs sharing-group size", "sharing group size", "rate (Mbit/s)", False,
                [("percentiles_vs_group_size.csv", i) for i in range(2, len(header) + 1)])


def _run_density(exp, out: Outputs):
    j = exp.density_operator
    header, cols = ["density_per_km2"], [exp.density_per_km2]
    M = exp.base.n_operators
    for s in exp.systems:
        for n in range(M):
            for eng in ("analytical", "mc"):
                if not getattr(exp.engine, eng):
                    continue
                vals = []
                for d in exp.density_per_km2:
                    ops = list(exp.base.operators)
                    o = ops[j]
                    ops[j] = OperatorParams(per_km2(d), o.user_density, o.tx_power_dbm, o.licensed_bw_hz)
                    sc = exp.scenario(s).with_operators(ops)
                    if eng == "analytical":
                        vals.append(coverage.median_rate(sc, n) / 1e6)
                    else:
                        vals.append(float(np.median(mc.rate_samples(sc, _samples(exp, sc, n)))) / 1e6)
                header.append(f"{s}_op{n + 1}_{eng}_mbps")
                cols.append(np.array(vals))
    out.table("median_vs_density.csv", header, cols)
    out.gnuplot("Median rate vs BS density", f"operator {j + 1} BS density (per km^2)", "median rate (Mbit/s)",
                False, [("median_vs_density.csv", i) for i in range(2, len(header) + 1)])


_RUNNERS = {
    ExperimentKind.SINR_CCDF: _run_sinr,
    ExperimentKind.RATE_CCDF: _run_rate,
    ExperimentKind.PARTIAL_LOADING: _run_rate,
    ExperimentKind.BAND73: _run_rate,
    ExperimentKind.BEAMWIDTH_SWEEP: _run_beamwidth,
    ExperimentKind.REQUIRED_BANDWIDTH: _run_required_bw,
    ExperimentKind.SHARING_GROUP_SWEEP: _run_groups,
    ExperimentKind.DENSITY_SWEEP: _run_density,
}


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in obj]
        return sorted(items) if isinstance(obj, (set, frozenset)) else items
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value") and hasattr(obj, "name"):
        return obj.value
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _versions() -> dict[str, str]:
    import scipy
    v = {"mmshare": __version__, "python": platform.python_version(), "numpy": np.__version__,
         "scipy": scipy.__version__, "backend": _accel.active_backend()}
    if _accel.HAVE_NUMBA:
        import numba
        v["numba"] = numba.__version__
    return v


def run_experiment(exp: ExperimentConfig, out_dir: Path) -> dict:
    """Run one experiment and write its CSVs, plot script and manifest."""
    out = Outputs(out_dir)
    t0 = time.perf_counter()
    _RUNNERS[exp.kind](exp, out)
    wall = time.perf_counter() - t0
    write_atomic(out_dir / "resolved.cfg", resolved_text(exp))
    manifest = {
        "experiment": exp.kind.value,
        "label": exp.label,
        "engine": exp.engine.value,
        "seed": exp.seed,
        "systems": exp.systems,
        "scenarios": {s: _jsonable(exp.scenario(s)) for s in exp.systems},
        "mc": _jsonable(exp.mc) if exp.engine.mc else None,
        "resolved_config": "resolved.cfg",
        "outputs": out.files,
        "versions": _versions(),
        "wall_time_s": round(wall, 3),
    }
    write_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=2, default=str) + "\n")
    return manifest


def _numeric_context(exc: BaseException) -> str:
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if f"{os.sep}mmshare{os.sep}" in f.filename]
    if not frames:
        return ""
    f = frames[-1]
    return f"{Path(f.filename).stem}.{f.name}"


def _execute(text: str, source: str, out_dir: Path) -> int:
    try:
        exp = build_experiment(text, source)
    except (ConfigError, ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(invalid="ignore"):
            manifest = run_experiment(exp, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        where = _numeric_context(exc)
        print(f"numerical failure in {where or 'mmshare'}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {len(manifest['outputs'])} files to {out_dir} in {manifest['wall_time_s']:.1f} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmshare", description="Spectrum license sharing experiments for mmWave cellular")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path, default=None, help="output directory (default: out/<config stem>)")
    ps = sub.add_parser("preset", help="run a built-in experiment")
    ps.add_argument("name", choices=sorted(PRESETS, key=lambda s: int(s[3:])))
    ps.add_argument("--engine", choices=[e.value for e in Engine], default=None)
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--out", type=Path, default=None, help="output directory (default: out/<name>)")
    ps.add_argument("--print-config", action="store_true", help="print the preset config and exit")
    sub.add_parser("list", help="list built-in presets")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.cmd == "list":
        for line in list_presets():
            print(line)
        return 0
    if args.cmd == "preset":
        text = preset_text(args.name, Engine(args.engine) if args.engine else None, args.seed)
        if args.print_config:
            print(text, end="")
            return 0
        return _execute(text, f"preset:{args.name}", args.out or Path("out") / args.name)
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _execute(text, str(args.config), args.out or Path("out") / args.config.stem)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
