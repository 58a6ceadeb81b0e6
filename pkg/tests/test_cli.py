"""Tests for config parsing, report files, figures and the CLI front end."""

import os

import numpy as np
import pytest

from switchjump.cli import main
from switchjump.config import (
    canonical_text,
    coerce,
    config_hash,
    parse_config,
    split_section,
)
from switchjump.errors import ConfigurationError, DomainError
from switchjump.plots import render_figure
from switchjump.reports import (
    format_value,
    read_report,
    strip_timestamp_header,
    write_report,
)


# --- config ---------------------------------------------------------------------

def test_coerce_types():
    assert coerce("3") == 3 and isinstance(coerce("3"), int)
    assert coerce("3.5") == 3.5
    assert coerce("true") is True and coerce("OFF") is False
    assert coerce("lorenz_rs") == "lorenz_rs"
    assert coerce(" 1e-3 ") == 1e-3


def test_parse_config_basics():
    cfg = parse_config("""
    # a comment
    preset = lorenz_rs
    sim.dt = 0.01   # trailing comment
    sim.paths = 100
    flag = yes
    """)
    assert cfg == {"preset": "lorenz_rs", "sim.dt": 0.01, "sim.paths": 100,
                   "flag": True}


def test_parse_config_errors_are_line_anchored():
    with pytest.raises(ConfigurationError, match=r"myfile:2"):
        parse_config("a = 1\nnot a pair\n", source="myfile")
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config("a = 1\na = 2\n")
    with pytest.raises(ConfigurationError, match="empty key"):
        parse_config("= 3\n")


def test_split_section_and_hash_stability():
    cfg = {"sim.dt": 0.01, "sim.seed": 7, "preset": "x"}
    assert split_section(cfg, "sim") == {"dt": 0.01, "seed": 7}
    h1 = config_hash(cfg, seed=7)
    h2 = config_hash(dict(reversed(list(cfg.items()))), seed=7)
    assert h1 == h2 and len(h1) == 12
    assert config_hash(cfg, seed=8) != h1
    assert "preset='x'" in canonical_text(cfg)


# --- reports --------------------------------------------------------------------

def test_format_value_normalizes_numpy_scalars():
    assert format_value(np.float64(0.1)) == repr(0.1)
    assert format_value(np.int64(3)) == "3"
    assert format_value(np.bool_(True)) == "true"
    assert format_value(False) == "false"
    assert format_value("abc") == "abc"


def test_write_and_read_report_roundtrip(tmp_path):
    path = str(tmp_path / "r.csv")
    rows = [{"a": 1.5, "b": True}, {"a": -2.0, "b": False}]
    write_report(path, ["a", "b"], rows, seed=9, config_hash="deadbeef0123")
    fields, got = read_report(path)
    assert fields == ["a", "b", "seed", "config_hash"]
    assert got[0]["a"] == "1.5" and got[0]["b"] == "true"
    assert all(r["seed"] == "9" and r["config_hash"] == "deadbeef0123" for r in got)
    with open(path) as fh:
        assert fh.readline().startswith("# generated:")


def test_report_deterministic_apart_from_timestamp(tmp_path):
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    rows = [{"v": 0.123456789}]
    write_report(p1, ["v"], rows, seed=1, config_hash="h")
    write_report(p2, ["v"], rows, seed=1, config_hash="h")
    t1 = strip_timestamp_header(open(p1).read())
    t2 = strip_timestamp_header(open(p2).read())
    assert t1 == t2


def test_write_report_rejects_unknown_fields(tmp_path):
    with pytest.raises(DomainError):
        write_report(str(tmp_path / "r.csv"), ["a"], [{"a": 1, "zzz": 2}],
                     seed=0, config_hash="h")


# --- figures --------------------------------------------------------------------

def test_render_figure_unknown_kind(tmp_path):
    with pytest.raises(ConfigurationError):
        render_figure(str(tmp_path / "none.csv"), "nope", str(tmp_path / "f.png"))


def test_render_figure_empty_report(tmp_path):
    report = str(tmp_path / "empty.csv")
    write_report(report, ["path_index", "t", "x_1", "lambda", "event_kind"], [],
                 seed=0, config_hash="h")
    out = render_figure(report, "trajectories", str(tmp_path / "fig.png"))
    assert os.path.exists(out) and os.path.getsize(out) > 0


# --- CLI ------------------------------------------------------------------------

def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_no_command_prints_help():
    assert main([]) == 1


def test_cli_missing_preset_is_usage_error(tmp_path, capsys):
    rc = main(["simulate", "--out", str(tmp_path)])
    assert rc == 1
    assert "preset" in capsys.readouterr().err


def test_cli_unknown_preset(tmp_path, capsys):
    rc = main(["simulate", "--set", "preset=nope", "--out", str(tmp_path)])
    assert rc == 1


def test_cli_simulate_writes_report_and_figure(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.cfg", """
    preset = two_state_linear
    sim.dt = 0.05
    sim.horizon = 1.0
    sim.paths = 5
    sim.seed = 3
    init.x = 0.5
    """)
    out = str(tmp_path / "out")
    rc = main(["simulate", "--config", cfg, "--out", out])
    assert rc == 0
    assert os.path.exists(os.path.join(out, "paths.csv"))
    assert os.path.getsize(os.path.join(out, "trajectories.png")) > 0
    captured = capsys.readouterr().out
    assert "simulate: 5 paths" in captured
    fields, rows = read_report(os.path.join(out, "paths.csv"))
    assert "seed" in fields and "config_hash" in fields
    assert all(r["seed"] == "3" for r in rows)


def test_cli_no_plots_flag(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["simulate", "--set", "preset=two_state_linear",
               "--set", "sim.dt=0.1", "--set", "sim.horizon=1.0",
               "--paths", "3", "--seed", "1", "--out", out, "--no-plots",
               "--quiet"])
    assert rc == 0
    assert not os.path.exists(os.path.join(out, "trajectories.png"))


def test_cli_determinism_bytes_apart_from_timestamp(tmp_path):
    args = ["simulate", "--set", "preset=two_state_linear",
            "--set", "sim.dt=0.1", "--set", "sim.horizon=1.0",
            "--paths", "4", "--seed", "11", "--no-plots", "--quiet"]
    out1, out2 = str(tmp_path / "o1"), str(tmp_path / "o2")
    assert main(args + ["--out", out1]) == 0
    assert main(args + ["--out", out2]) == 0
    a = strip_timestamp_header(open(os.path.join(out1, "paths.csv")).read())
    b = strip_timestamp_header(open(os.path.join(out2, "paths.csv")).read())
    assert a == b


def test_cli_check_assumptions_passes_for_presets(tmp_path):
    for preset in ("two_state_linear", "lemniscate_rs"):
        out = str(tmp_path / preset)
        rc = main(["check-assumptions", "--set", f"preset={preset}",
                   "--out", out, "--quiet"])
        assert rc == 0, preset
        assert os.path.exists(os.path.join(out, "assumption_checks.csv"))
        assert os.path.exists(os.path.join(out, "checks.png"))


def test_cli_series_vs_oracle_within_bound(tmp_path):
    out = str(tmp_path / "series")
    rc = main(["series-vs-oracle", "--set", "preset=two_state_linear",
               "--set", "series.t=0.5", "--set", "series.max_terms=12",
               "--out", out, "--quiet"])
    assert rc == 0
    _fields, rows = read_report(os.path.join(out, "series_vs_oracle.csv"))
    assert len(rows) == 13
    assert all(r["within_bound"] == "true" for r in rows)
    # deviation decreases as terms accumulate
    assert float(rows[-1]["deviation"]) < float(rows[0]["deviation"])
    assert os.path.exists(os.path.join(out, "series.png"))


def test_cli_series_rejects_state_dependent_rates(tmp_path, capsys):
    rc = main(["series-vs-oracle", "--set", "preset=lemniscate_rs",
               "--out", str(tmp_path), "--quiet"])
    assert rc == 1
    assert "constant-rate" in capsys.readouterr().err


def test_cli_dynkin_two_state(tmp_path):
    out = str(tmp_path / "dynkin")
    rc = main(["dynkin", "--set", "preset=two_state_linear",
               "--set", "sim.dt=0.05", "--set", "sim.horizon=0.5",
               "--set", "dynkin.t=0.5", "--paths", "400", "--seed", "5",
               "--out", out, "--quiet"])
    assert rc == 0
    _fields, rows = read_report(os.path.join(out, "dynkin.csv"))
    assert rows[0]["passed"] == "true"
    assert os.path.exists(os.path.join(out, "dynkin.png"))


def test_cli_cesaro_two_state(tmp_path):
    out = str(tmp_path / "cesaro")
    rc = main(["cesaro", "--set", "preset=two_state_linear",
               "--set", "sim.dt=0.25", "--set", "sim.horizon=10.0",
               "--set", "cesaro.periods=10", "--set", "cesaro.phi=regime_is_1",
               "--set", "cesaro.starts=0@1;1@2",
               "--paths", "80", "--seed", "2", "--out", out, "--quiet"])
    assert rc == 0
    _fields, rows = read_report(os.path.join(out, "cesaro.csv"))
    assert {r["start"] for r in rows} == {"0@1", "1@2"}
    assert os.path.exists(os.path.join(out, "cesaro.png"))


def test_cli_seed_override_changes_hash(tmp_path):
    out1, out2 = str(tmp_path / "s1"), str(tmp_path / "s2")
    base = ["simulate", "--set", "preset=two_state_linear",
            "--set", "sim.dt=0.1", "--set", "sim.horizon=1.0",
            "--paths", "2", "--no-plots", "--quiet"]
    assert main(base + ["--seed", "1", "--out", out1]) == 0
    assert main(base + ["--seed", "2", "--out", out2]) == 0
    _f1, r1 = read_report(os.path.join(out1, "paths.csv"))
    _f2, r2 = read_report(os.path.join(out2, "paths.csv"))
    assert r1[0]["config_hash"] != r2[0]["config_hash"]
