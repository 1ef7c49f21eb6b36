import json
import subprocess
import sys

import numpy as np
import pytest

from loschmidt.cli import (
    ConfigError,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    build_run_config,
    main,
    parse_config_text,
    read_series_csv,
    read_series_json,
    run,
    write_series_csv,
    write_series_json,
)
from loschmidt.estimators import EstimatorConfig, f1_dr
from loschmidt.presets import load

DISPLACED_CFG = """
# comparison run on the displaced-oscillator scenario
scenario = displaced_ho
estimators = exact, f1
n_traj = 2000
seed = 7
n_steps = 40
"""

INLINE_CFG = """
estimators = f0
kinetic_prime = 0
kinetic_double_prime = 0
potential_prime = 0 -0.5
potential_double_prime = 0 0.5
state_q = 0
state_p = 0
state_sigma = 1
n_traj = 4000
n_steps = 30
tau = 0.05
label = gradient_inline
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# config parsing


def test_parse_rejects_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("seed = 1\nseed = 2")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("just some words")


def test_build_requires_estimators_and_system():
    with pytest.raises(ConfigError, match="estimator"):
        build_run_config({"scenario": "displaced_ho"})
    with pytest.raises(ConfigError, match="scenario or an inline"):
        build_run_config({"estimators": "f1"})
    with pytest.raises(ConfigError, match="unknown estimator"):
        build_run_config({"scenario": "displaced_ho", "estimators": "f7"})
    with pytest.raises(ConfigError, match="unknown scenario"):
        build_run_config({"scenario": "nope", "estimators": "f1"})


def test_inline_system_round_trip():
    entries = parse_config_text(INLINE_CFG)
    cfg = build_run_config(entries)
    assert cfg.label == "gradient_inline"
    assert cfg.pair.delta.potential[0].coeffs == (0.0, 1.0)
    assert cfg.state.dims == 1


def test_inline_system_validates_invariants():
    bad = INLINE_CFG.replace("state_sigma = 1", "state_sigma = -1")
    with pytest.raises(ConfigError, match="sigma"):
        build_run_config(parse_config_text(bad))


# ---------------------------------------------------------------------------
# series file round trips


def series_fixture():
    sc = load("displaced_ho")
    cfg = EstimatorConfig(n_traj=300, seed=3, tau=sc.tau, n_steps=25)
    return f1_dr(sc.state, sc.pair, cfg)


def test_csv_round_trip_exact(tmp_path):
    series = series_fixture()
    path = tmp_path / "f1.csv"
    write_series_csv(series, path)
    back = read_series_csv(path)
    assert np.array_equal(back.times, series.times)
    assert np.array_equal(back.values, series.values)
    assert np.array_equal(back.stderr, series.stderr)


def test_json_round_trip_exact(tmp_path):
    series = series_fixture()
    path = tmp_path / "f1.json"
    write_series_json(series, path)
    back = read_series_json(path)
    assert np.array_equal(back.times, series.times)
    assert np.array_equal(back.values, series.values)
    assert np.array_equal(back.stderr, series.stderr)
    assert back.meta["estimator"] == "f1"


# ---------------------------------------------------------------------------
# full runs


def test_run_writes_expected_files(tmp_path):
    cfg = build_run_config(parse_config_text(DISPLACED_CFG))
    results = run(cfg, tmp_path / "out")
    assert set(results) == {"exact", "f1"}
    names = {p.name for p in (tmp_path / "out").iterdir()}
    assert {"exact.csv", "f1.csv", "comparison.csv", "comparison_max.json",
            "run_metadata.json"} <= names
    header = (tmp_path / "out" / "f1.csv").read_text().splitlines()[0]
    assert header == "step,time,re_f,im_f,abs_f_sq,stderr"
    summary = json.loads((tmp_path / "out" / "comparison_max.json").read_text())
    assert summary["f1"] < 0.05


def test_run_is_byte_deterministic(tmp_path):
    cfg = build_run_config(parse_config_text(DISPLACED_CFG))
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for name in ("exact.csv", "f1.csv", "comparison.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_thread_count_does_not_change_results(tmp_path):
    text = DISPLACED_CFG.replace("exact, f1", "exact, f0, f1")
    cfg = build_run_config(parse_config_text(text))
    run(cfg, tmp_path / "t1", threads=1)
    run(cfg, tmp_path / "t4", threads=4)
    for name in ("exact.csv", "f0.csv", "f1.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t4" / name).read_bytes()


def test_run_zero_perturbation_unit_modulus(tmp_path):
    text = """
estimators = f0
kinetic_prime = 0 0 0.5
kinetic_double_prime = 0 0 0.5
potential_prime = 0 0 0.5
potential_double_prime = 0 0 0.5
n_steps = 12
"""
    cfg = build_run_config(parse_config_text(text))
    run(cfg, tmp_path / "out")
    lines = (tmp_path / "out" / "f0.csv").read_text().splitlines()[1:]
    abs_sq = [float(line.split(",")[4]) for line in lines]
    assert all(v == 1.0 for v in abs_sq)


def test_run_json_format_and_spectrum(tmp_path):
    text = DISPLACED_CFG + "output_format = json\nspectrum_damping_time = 4.0\n"
    cfg = build_run_config(parse_config_text(text))
    run(cfg, tmp_path / "out")
    names = {p.name for p in (tmp_path / "out").iterdir()}
    assert {"exact.json", "f1.json", "comparison.json", "spectrum_exact.csv",
            "spectrum_f1.csv"} <= names


# ---------------------------------------------------------------------------
# entry point and exit codes


def test_main_run_and_seed_override(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, DISPLACED_CFG)
    assert main(["run", str(cfg_path), "--output-dir", str(tmp_path / "o1")]) == 0
    assert main([
        "run", str(cfg_path), "--output-dir", str(tmp_path / "o2"), "--seed", "9",
    ]) == 0
    meta1 = json.loads((tmp_path / "o1" / "run_metadata.json").read_text())
    meta2 = json.loads((tmp_path / "o2" / "run_metadata.json").read_text())
    assert meta1["seed"] == 7 and meta2["seed"] == 9
    assert (tmp_path / "o1" / "f1.csv").read_bytes() != (
        tmp_path / "o2" / "f1.csv"
    ).read_bytes()


def test_main_invalid_config_exit_two(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, "estimators = f9\nscenario = displaced_ho\n")
    assert main(["run", str(cfg_path)]) == EXIT_CONFIG
    assert "invalid config" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_main_numerical_abort_exit_three(tmp_path, capsys):
    # inverted quartic ejects trajectories -> numerical abort
    text = """
estimators = f1
kinetic_prime = 0 0 0.5
kinetic_double_prime = 0 0 0.5
potential_prime = 0 0 0 0 -1
potential_double_prime = 0 0.1 0 0 -1
state_q = 3
n_traj = 100
n_steps = 400
tau = 0.5
"""
    cfg_path = write_cfg(tmp_path, text)
    assert main(["run", str(cfg_path), "--output-dir", str(tmp_path / "out")]) == EXIT_NUMERIC
    assert "numerical abort" in capsys.readouterr().err


def test_main_scenarios_lists_all(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out
    for name in (
        "linear_gradient",
        "displaced_ho",
        "ho_diff_k",
        "cubic_perturbation",
        "kicked_rotor",
        "morse_like",
    ):
        assert name in out


def test_console_entry_point_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "loschmidt.cli", "scenarios"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "displaced_ho" in proc.stdout


def test_chain_estimator_rejected_on_kicked_rotor(tmp_path, capsys):
    # the closed-form chain needs polynomial potentials: invalid request
    cfg_path = write_cfg(
        tmp_path, "scenario = kicked_rotor\nestimators = f2_gaussian\n"
    )
    assert main(["run", str(cfg_path), "--output-dir", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "invalid config" in capsys.readouterr().err


def test_comparison_reports_dephasing_band(tmp_path):
    # the reported maximum deviation sits inside the statistical band
    text = DISPLACED_CFG.replace("n_traj = 2000", "n_traj = 10000").replace(
        "n_steps = 40", "n_steps = 252"
    )
    cfg = build_run_config(parse_config_text(text))
    results = run(cfg, tmp_path / "out")
    summary = json.loads((tmp_path / "out" / "comparison_max.json").read_text())
    band = 3 * results["f1"].stderr + 1e-6
    assert summary["f1"] <= band.max()
