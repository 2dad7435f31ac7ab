import json

import numpy as np
import pytest

from mmshare import cli, coverage
from mmshare.config import (ConfigError, build_experiment, parse_config_text, parse_grid, preset_text,
                            PRESETS)
from mmshare.model import validate
from mmshare.quad import NonConvergence


def run(argv):
    return cli.main([str(a) for a in argv])


def test_list_contains_required_descriptions(capsys):
    assert run(["list"]) == 0
    out = capsys.readouterr().out
    assert "fig5: median rate vs beamwidth" in out
    assert "fig9: rate percentiles vs sharing-group size, 10 operators @50MHz" in out
    assert "fig8: 73 GHz, 1 GHz bandwidth" in out
    for i in range(1, 11):
        assert f"fig{i}:" in out


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_builds(name):
    exp = build_experiment(preset_text(name))
    for s in exp.systems:
        assert validate(exp.scenario(s)) == []


def test_malformed_partition_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment.systems = custom\nsharing.groups = 1;1,2\n")
    assert run(["run", cfg, "--out", tmp_path / "o"]) == 2
    err = capsys.readouterr().err
    assert "not a partition" in err and "bad.cfg:2" in err


@pytest.mark.parametrize("text, needle", [
    ("experiment.kind = nope\n", "bad value"),
    ("no equals sign\n", "expected 'key = value'"),
    ("channel.alpha_los = 2\nchannel.alpha_los = 3\n", "duplicate key"),
    ("channel.nothing = 1\n", "unknown key"),
    ("operator.3.tx_power_dbm = 20\n", "out of range"),
    ("antenna.half_beamwidth_deg = 0\n", "half beamwidth must be positive"),
])
def test_config_errors_name_the_rule(text, needle, tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(text)
    assert run(["run", cfg, "--out", tmp_path / "o"]) == 2
    assert needle in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert run(["run", tmp_path / "missing.cfg"]) == 2


def test_numeric_failure_exits_3(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise NonConvergence("forced")
    monkeypatch.setattr(coverage, "sinr_coverage", boom)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment.kind = sinr_ccdf\nexperiment.systems = sys1\n")
    assert run(["run", cfg, "--out", tmp_path / "o"]) == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err and "NonConvergence" in err


def test_fig6_csv_header(tmp_path):
    cfg = tmp_path / "f6.cfg"
    cfg.write_text(preset_text("fig6").replace("sweep.beamwidth_deg = 5:5:45", "sweep.beamwidth_deg = 10"))
    assert run(["run", cfg, "--out", tmp_path / "o"]) == 0
    lines = (tmp_path / "o" / "required_bandwidth.csv").read_text().splitlines()
    assert lines[0] == "beamwidth_deg,required_bw_mhz"
    assert 65 <= float(lines[1].split(",")[1]) <= 85


def test_fig1_writes_eight_curves_and_is_reproducible(tmp_path):
    text = preset_text("fig1") + "mc.drops = 2000\ngrid.sinr_db = -10:10:30\n"
    cfg = tmp_path / "f1.cfg"
    cfg.write_text(text)
    assert run(["run", cfg, "--out", tmp_path / "a"]) == 0
    assert run(["run", cfg, "--out", tmp_path / "b"]) == 0
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert len(csvs) == 8
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "sys1_mc.csv").read_text().startswith("threshold,probability,stderr\n")
    assert (tmp_path / "a" / "sys1_analytical.csv").read_text().startswith("threshold,probability\n")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 0 and "numpy" in manifest["versions"]
    assert (tmp_path / "a" / "plot.gp").exists()
    # the resolved config rebuilds scenarios that validate cleanly
    exp = build_experiment((tmp_path / "a" / "resolved.cfg").read_text())
    for s in exp.systems:
        assert validate(exp.scenario(s)) == []


def test_preset_command_overrides(tmp_path, capsys):
    assert run(["preset", "fig2", "--engine", "mc", "--seed", "7", "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "experiment.engine = mc" in out and "experiment.seed = 7" in out


def test_grid_parsing():
    np.testing.assert_allclose(parse_grid("-30:1:50"), np.arange(-30, 51))
    np.testing.assert_allclose(parse_grid("log:1:100:3"), [1, 10, 100])
    np.testing.assert_allclose(parse_grid("25,50,75"), [25, 50, 75])
    with pytest.raises(ValueError):
        parse_grid("5:0:10")


def test_parse_reports_line_numbers():
    with pytest.raises(ConfigError) as e:
        parse_config_text("# comment\n\nmc.drops = -3\n", "x.cfg")
    assert e.value.line == 3 and e.value.key == "mc.drops"
