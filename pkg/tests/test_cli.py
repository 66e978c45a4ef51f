import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fockmarket.cli import ConfigError, main, parse_config, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def _write(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_minimal_fpl(tmp_path):
    path = _write(tmp_path, """
[scenario]
kind = fpl
[model]
m = 1
o = 2
lam = 1.0
omega_a = 1.0
omega_c = 1.0
omega_big_a = 2.0
omega_big_c = 2.0
n = 10
k = 20
""")
    cfg = parse_config(path)
    assert cfg.scenario == "fpl"
    assert cfg.t_max == 10.0 and cfg.samples == 201  # defaults filled
    assert cfg.model["m"] == 1


def test_parse_rejects_unknown_scenario(tmp_path):
    path = _write(tmp_path, "[scenario]\nkind = fpll\n")
    with pytest.raises(ConfigError) as exc:
        parse_config(path)
    msg = str(exc.value)
    assert "two-trader-exact" in msg and "fpl" in msg


def test_parse_collects_all_errors(tmp_path):
    path = _write(tmp_path, """
[scenario]
kind = fpl
[model]
m = 1
bogus = 3
[time]
t_max = -1
""")
    with pytest.raises(ConfigError) as exc:
        parse_config(path)
    errors = exc.value.errors
    assert any("bogus" in e for e in errors)
    assert any("t_max" in e for e in errors)
    assert any("missing" in e for e in errors)
    assert len(errors) >= 3


def test_parse_rejects_unknown_key(tmp_path):
    path = _write(tmp_path, """
[scenario]
kind = meanfield
[model]
phi = 0.0
nu = 0.0
x0 = 0.25
n0 = 1.0
k0 = 3.0
zeta = 4
""")
    with pytest.raises(ConfigError) as exc:
        parse_config(path)
    assert any("zeta" in e for e in errors_of(exc))


def errors_of(exc):
    return exc.value.errors


def test_fpl_run_matches_frozen_fixture(tmp_path):
    cfg = parse_config(CONFIGS / "fpl_fig1.cfg")
    run(cfg, out_dir=tmp_path)
    got = (tmp_path / "fig1_w1_1_w2_1.csv").read_bytes()
    ref = (FIXTURES / "fig1_w1_1_w2_1.csv").read_bytes()
    assert got == ref


def test_run_is_deterministic(tmp_path):
    cfg = parse_config(CONFIGS / "meanfield.cfg")
    run(cfg, out_dir=tmp_path / "a")
    run(cfg, out_dir=tmp_path / "b")
    for name in ("n_closed.csv", "portfolio.csv", "n_ode.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_two_trader_conserved_report(tmp_path):
    cfg = parse_config(CONFIGS / "two_trader.cfg")
    run(cfg, out_dir=tmp_path)
    report = (tmp_path / "conserved_report.txt").read_text()
    drifts = {}
    for line in report.strip().splitlines():
        key, val = line.split("=")
        drifts[key] = float(val)
    for name in ("max_drift_N", "max_drift_K", "max_drift_Gamma", "max_drift_Delta"):
        assert drifts[name] < 1e-8
    assert drifts["norm_comm_price_weighted_Q1"] > 0.1


def test_stochastic_verdict_report(tmp_path):
    cfg = parse_config(CONFIGS / "stochastic_verdict.cfg")
    run(cfg, out_dir=tmp_path)
    text = (tmp_path / "verdict.txt").read_text()
    assert "portfolio_stationary=true" in text


def test_effective_l_run(tmp_path):
    cfg = parse_config(CONFIGS / "effective_l.cfg")
    run(cfg, out_dir=tmp_path)
    report = (tmp_path / "conserved_report.txt").read_text()
    assert "max_drift_Q_1" in report
    for line in report.strip().splitlines():
        assert float(line.split("=")[1]) < 1e-8


def test_manifest_lists_hashes(tmp_path):
    cfg = parse_config(CONFIGS / "fpl_fig1.cfg")
    run(cfg, out_dir=tmp_path)
    lines = (tmp_path / "manifest.txt").read_text().strip().splitlines()
    assert lines, "manifest must not be empty"
    for line in lines:
        name, digest = line.split("=")
        assert len(digest) == 64
        assert (tmp_path / name).exists()


def test_sweep_expands_subdirectories(tmp_path):
    path = _write(tmp_path, """
[scenario]
kind = fpl
[model]
m = 1
o = 2
lam = 1.0
omega_a = 1.0
omega_c = 1.0
omega_big_a = 2.0
omega_big_c = 2.0
n = 10
k = 20
w1 = 1.0
w2 = 1.0
[time]
t_max = 2.0
samples = 21
[sweep]
w2 = 1.0, 10.0
""")
    cfg = parse_config(path)
    run(cfg, out_dir=tmp_path / "out", jobs=2)
    assert (tmp_path / "out" / "w2_1" / "series.csv").exists()
    assert (tmp_path / "out" / "w2_10" / "series.csv").exists()


def _cli(args):
    proc = subprocess.run([sys.executable, "-m", "fockmarket", *args],
                          capture_output=True, text=True)
    return proc


def test_cli_exit_codes(tmp_path):
    bad = _write(tmp_path, "[scenario]\nkind = nope\n", "bad.cfg")
    assert _cli(["run", str(bad)]).returncode == 2

    good = CONFIGS / "fpl_fig1.cfg"
    proc = _cli(["run", str(good), "--out", str(tmp_path / "ok")])
    assert proc.returncode == 0
    assert (tmp_path / "ok" / "fig1_w1_1_w2_1.csv").exists()

    # runtime failure: two-trader initial state violating a model contract
    broken = _write(tmp_path, """
[scenario]
kind = two-trader-exact
[model]
[initial]
n1 = 1
n2 = 1
k1 = -2
k2 = 0
o = 1
m = 1
""", "broken.cfg")
    proc = _cli(["run", str(broken)])
    assert proc.returncode == 1
    assert proc.stderr.strip()


def test_cli_verify_roundtrip(tmp_path):
    cfg_text = (CONFIGS / "fpl_fig1.cfg").read_text().replace(
        "directory = out_fpl", "directory = out_v")
    path = _write(tmp_path, cfg_text, "v.cfg")
    assert _cli(["run", str(path)]).returncode == 0
    assert _cli(["verify", str(path)]).returncode == 0
    target = tmp_path / "out_v" / "fig1_w1_1_w2_1.csv"
    target.write_text(target.read_text().replace("0.05", "0.06", 1))
    assert _cli(["verify", str(path)]).returncode == 1


def test_cli_plots_flag(tmp_path):
    pytest.importorskip("matplotlib")
    cfg_text = """
[scenario]
kind = meanfield
[model]
phi = 0.0
nu = 0.0
x0 = 0.25
n0 = 1.0
k0 = 3.0
[time]
t_max = 2.0
samples = 21
"""
    path = _write(tmp_path, cfg_text)
    proc = _cli(["run", str(path), "--out", str(tmp_path / "o"), "--plots"])
    assert proc.returncode == 0
    assert (tmp_path / "o" / "n_closed.png").exists()
