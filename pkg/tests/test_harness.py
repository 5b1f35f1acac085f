import csv
import json
import os

import numpy as np
import pytest

from cpmisspec import ConfigurationError, ExperimentConfig, parse_config, qq_table
from cpmisspec.errors import ResumeError
from cpmisspec.harness import (run_regime_comparison, run_section5, scenario_config,
                               subsampling_config)

CONFIG = """
# scenario 1, steep curve
signal.kind = logistic
signal.M = 1000
covariate.inner_lo = 0.45
covariate.inner_hi = 0.55
covariate.inner_density = 8
theta0 = 0.5
sigma = 0.6
alpha = 1
sample_sizes = 50, 200
replicates = 60
limit_draws = 300
seed = 17
scenario = s1
"""


def test_parse_flat_config():
    cfg = parse_config(CONFIG)
    assert cfg.M == (1000.0,) and cfg.sample_sizes == (50, 200)
    assert cfg.inner_density == 8.0 and cfg.alpha == 1.0 and cfg.gamma is None
    spec = cfg.model()
    assert spec.covariate.density(0.5) == 8.0
    assert parse_config(CONFIG, seed=3).seed == 3


@pytest.mark.parametrize("old,new", [("seed = 17", "bogus = 1"), ("replicates = 60", "replicates = 1"),
                                     ("sample_sizes = 50, 200", "sample_sizes = 200, 50"),
                                     ("seed = 17", "regimes = slow, medium"),
                                     ("replicates = 60", "replicates = many"),
                                     ("seed = 17", "seed = 1\nseed = 2")])
def test_config_errors(old, new):
    with pytest.raises(ConfigurationError):
        parse_config(CONFIG.replace(old, new))


def test_subsampling_config_defaults_to_known_levels():
    cfg = parse_config("study = subsampling\ngammas = 0.8, 1\nsigma = 1.8\nn = 2000\n")
    assert cfg.fitter == "known_levels" and cfg.gammas == (0.8, 1.0)


def test_qq_identity_and_scaling(rng):
    a = rng.standard_normal(1000)
    t = qq_table(a, a)
    assert np.array_equal(t.emp_q, t.limit_q)
    t2 = qq_table(a, 2 * a)
    assert np.allclose(t2.limit_q, 2 * t2.emp_q)
    assert len(t.levels) == 99
    assert np.all(np.diff(t.emp_q) >= 0) and np.all(np.diff(t.limit_q) >= 0)


def test_qq_calibration(rng):
    t = qq_table(rng.standard_normal(100_000), rng.standard_normal(100_000))
    assert np.max(np.abs(t.emp_q - t.limit_q)) < 0.03


def test_qq_rejects_empty():
    with pytest.raises(ConfigurationError):
        qq_table([], [1.0])


def _run(tmp_path, name, text=CONFIG, resume=False):
    cfg = parse_config(text)
    cfg.output_dir = str(tmp_path / name)
    return cfg, run_regime_comparison(cfg, resume=resume)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_outputs_and_manifest(tmp_path):
    cfg, res = _run(tmp_path, "a")
    assert res.ok
    out = tmp_path / "a"
    names = sorted(os.listdir(out))
    expected = {f"qq_s1_M1000_n{n}_{r}.csv" for n in (50, 200) for r in ("slow", "intermediate", "fast")}
    assert expected <= set(names)
    rows = _read(out / "qq_s1_M1000_n50_fast.csv")
    assert rows[0] == ["p", "emp_q", "limit_q"] and len(rows) == 100
    ks = _read(out / "ks_summary.csv")
    assert ks[0] == ["scenario", "M", "n", "regime", "ks"] and len(ks) == 7
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["files"]) == expected | {"ks_summary.csv"}
    for cell in man["cells"].values():
        assert cell["data_seeds"]["base"] == 17
        for entry in cell["regimes"].values():
            assert "limit_seed" in entry and entry["status"] == "ok"


def test_byte_identical_reruns(tmp_path):
    _run(tmp_path, "a")
    _run(tmp_path, "b")
    csvs = [n for n in os.listdir(tmp_path / "a") if n.endswith(".csv")]
    assert len(csvs) == 7
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resume_rules(tmp_path):
    _run(tmp_path, "a")
    before = (tmp_path / "a" / "ks_summary.csv").read_bytes()
    with pytest.raises(ResumeError):
        _run(tmp_path, "a")
    _run(tmp_path, "a", resume=True)
    assert (tmp_path / "a" / "ks_summary.csv").read_bytes() == before
    with pytest.raises(ResumeError):
        _run(tmp_path, "a", CONFIG.replace("seed = 17", "seed = 18"), resume=True)


def test_failed_cells_are_recorded(tmp_path):
    # logistic / uniform has b < 0, so the slow regime is undefined
    text = "sigma = 1\ngamma = 1\nsample_sizes = 50\nreplicates = 20\nlimit_draws = 100\n"
    cfg, res = _run(tmp_path, "f", text)
    assert not res.ok
    assert [f[1] for f in res.failures] == ["slow"]
    man = json.loads((tmp_path / "f" / "manifest.json").read_text())
    cell = next(iter(man["cells"].values()))
    assert cell["status"] == "failed"
    assert cell["regimes"]["slow"]["status"] == "failed"
    assert cell["regimes"]["fast"]["status"] == "ok"


def test_shallow_curve_slow_regime_wins_at_large_n():
    res = run_regime_comparison(scenario_config(1, 35, sample_sizes=(4000,), seed=5, limit_draws=2000))
    assert res.ks_value(35, 4000, "slow") < res.ks_value(35, 4000, "fast")


def test_intermediate_regime_robust_to_small_n():
    res = run_regime_comparison(scenario_config(1, 1000, sample_sizes=(50, 100), seed=6))
    a, b = res.ks_value(1000, 50, "intermediate"), res.ks_value(1000, 100, "intermediate")
    assert max(a, b) / min(a, b) < 2


def test_subsampling_report_contract(tmp_path):
    cfg = subsampling_config([1.0], 600, 6, n1=40, n2=80, r=40, seed=2, output_dir=str(tmp_path))
    rows = run_section5(cfg)
    assert {"zeta_true", "rate_exponent_true", "median_zeta", "median_rate_exponent",
            "coverage", "mean_length"} <= set(rows[0])
    assert rows[0]["rate_exponent_true"] == 1.0
    assert (tmp_path / "subsampling_summary.csv").exists()


def test_subsampling_coverage_gamma_one():
    rows = run_section5(subsampling_config([1.0], 2000, 100, r=500, n_groups=10, ci_subsamples=500,
                                        seed=3))
    assert 0.88 <= rows[0]["coverage"] <= 0.99


@pytest.mark.xfail(strict=True, reason=(
    "finite-sample bias of the deviation ratio at n1 = 100: with sigma = 1.8 the argmin of the "
    "size-100 estimator is truncated by the unit interval, so the estimate settles near 0.8-0.9"))
def test_subsampling_gamma_two_clamps_to_one():
    rows = run_section5(subsampling_config([2.0], 2000, 50, r=300, coverage=False, seed=3))
    assert rows[0]["median_zeta"] == 1.0
