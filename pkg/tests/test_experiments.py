import json
import math
import subprocess
import sys

import numpy as np
import pytest

from smoothmatch import experiments as ex
from smoothmatch.experiments import ConfigError, ScenarioConfig
from smoothmatch.online_algorithms import corollary_bounds


def test_config_validation_messages():
    cfg = ScenarioConfig(d=0, n=0, sigma=2.0, algorithm="nope", trials=0)
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    msg = str(err.value)
    for fieldname in ("d:", "n:", "sigma:", "algorithm:", "trials:"):
        assert fieldname in msg


def test_config_json_roundtrip_and_unknown_field():
    cfg = ScenarioConfig.from_json(
        json.dumps({"d": 1, "n": 8, "sigma": 0.5, "algorithm": "greedy", "trials": 2, "seed": 3})
    )
    assert cfg.n == 8 and cfg.algorithm == "greedy"
    with pytest.raises(ConfigError, match="unknown config fields"):
        ScenarioConfig.from_json(json.dumps({"d": 1, "n": 8, "sigma": 0.5, "bogus": 1}))


def test_trivial_scenario_ratio_one():
    cfg = ScenarioConfig(d=1, n=1, sigma=1.0, algorithm="greedy", trials=1, seed=5)
    (rec,) = ex.run_scenario(cfg)
    assert rec.ratio == pytest.approx(1.0, abs=1e-9)


def test_scenario_reproducible_and_perfect():
    cfg = ScenarioConfig(
        d=2, n=12, sigma=0.5, request_spec="heterogeneous", algorithm="rs_lifted", trials=3, seed=11
    )
    r1 = ex.run_scenario(cfg)
    r2 = ex.run_scenario(cfg)
    for a, b in zip(r1, r2):
        assert a == b
    assert all(rec.ratio >= 1.0 - 1e-9 for rec in r1)


def test_greedy_and_rs_same_seed_both_perfect():
    base = dict(d=1, n=10, sigma=1.0, trials=2, seed=9)
    for algorithm in ("greedy", "rs_lifted"):
        recs = ex.run_scenario(ScenarioConfig(algorithm=algorithm, **base))
        assert len(recs) == 2
        assert all(rec.cost_alg >= 0 and rec.cost_opt > 0 for rec in recs)


def test_rs_lifted_mean_below_corollary_bound():
    cfg = ScenarioConfig(d=1, n=256, sigma=1.0, algorithm="rs_lifted", trials=20, seed=17)
    recs = ex.run_scenario(cfg)
    costs = np.array([rec.cost_alg for rec in recs])
    bound = corollary_bounds(256, 1, "rs")
    se = costs.std(ddof=1) / math.sqrt(len(costs))
    assert costs.mean() <= bound + 3 * se


def test_reduced_records_decomposition():
    cfg = ScenarioConfig(
        d=1,
        n=32,
        sigma=0.25,
        request_spec="heterogeneous",
        server_preset="corner_cluster",
        algorithm="rs_reduced",
        trials=5,
        seed=23,
    )
    for rec in ex.run_scenario(cfg):
        assert rec.cost_alg <= rec.inner_cost + rec.proxy_cost + 1e-9
        assert rec.proxy_cost > 0.0
        assert rec.h == 5  # choose_height(32, 1, 'rs')


def test_heterogeneous_suite_passes_certificate():
    from smoothmatch.rng import stream

    cfg = ScenarioConfig(d=2, n=6, sigma=0.25, request_spec="heterogeneous", trials=1, seed=3)
    dists = ex.make_distributions(cfg, stream(3, 0))
    assert len(dists) == 6
    assert all(d.density_cap_ok() for d in dists)
    assert len({id(d) for d in dists}) == 6  # actually distinct distributions


def test_server_presets():
    from smoothmatch.rng import stream

    cfg = ScenarioConfig(d=2, n=9, sigma=1.0)
    dists = ex.make_distributions(cfg, stream(1, 0))
    grid = ex.make_servers(
        ScenarioConfig(d=2, n=9, sigma=1.0, server_preset="uniform_grid"), dists, stream(1, 0)
    )
    assert grid.shape == (9, 2)
    assert len(np.unique(grid, axis=0)) == 9
    single = ex.make_servers(
        ScenarioConfig(d=2, n=4, sigma=1.0, server_preset="single_point"), dists[:4], stream(1, 0)
    )
    assert (single == 0).all()
    corner = ex.make_servers(
        ScenarioConfig(d=2, n=9, sigma=1.0, server_preset="corner_cluster"), dists, stream(1, 0)
    )
    assert (corner <= 0.1).all()


def test_fit_scaling_exact_power_laws():
    recs = []
    for n in (64, 128, 256, 512):
        for t in range(3):
            recs.append(
                ex.ExperimentRecord(
                    trial=t, d=1, n=n, sigma=1.0, algorithm="greedy", server_preset="sampled_from_D",
                    h=0, cost_alg=math.sqrt(n), cost_opt=float(n) ** (2 / 3), ratio=1.0,
                    proxy_cost=0.0, seed=0,
                )
            )
    fit = ex.fit_scaling(recs)
    assert fit.slope == pytest.approx(0.5, abs=1e-9)
    assert fit.stderr == pytest.approx(0.0, abs=1e-9)
    fit = ex.fit_scaling(recs, value=lambda r: r.cost_opt)
    assert fit.slope == pytest.approx(2 / 3, abs=1e-9)
    with pytest.raises(ValueError):
        ex.fit_scaling(recs[:3])


def test_csv_format_and_reproducibility(tmp_path):
    cfg = ScenarioConfig(d=1, n=6, sigma=1.0, algorithm="greedy", trials=2, seed=13)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    ex.write_csv(ex.run_scenario(cfg), out1)
    ex.write_csv(ex.run_scenario(cfg), out2)
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == ",".join(ex.CSV_COLUMNS)
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "0" and first[-1] == "13"


def test_verify_bounds_unknown_suite():
    with pytest.raises(ConfigError):
        ex.verify_bounds("nope")


def test_verify_reduction_suite_passes():
    results = ex.verify_bounds("reduction")
    assert all(res.passed for res in results)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "smoothmatch.cli", *args], capture_output=True, text=True
    )


def test_cli_run_and_reproducibility(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps({"d": 1, "n": 8, "sigma": 1.0, "algorithm": "greedy", "trials": 2, "seed": 1})
    )
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    res = _run_cli("run", "--config", str(cfg_path), "--out", str(out1))
    assert res.returncode == 0, res.stderr
    res = _run_cli("run", "--config", str(cfg_path), "--out", str(out2))
    assert res.returncode == 0
    assert out1.read_bytes() == out2.read_bytes()
    # seed override changes the records
    out3 = tmp_path / "r3.csv"
    res = _run_cli("run", "--config", str(cfg_path), "--out", str(out3), "--seed", "2")
    assert res.returncode == 0
    assert out1.read_bytes() != out3.read_bytes()


def test_cli_config_error_exit_code(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"d": 1, "n": 8, "sigma": 5.0, "trials": 1}))
    res = _run_cli("run", "--config", str(cfg_path), "--out", str(tmp_path / "x.csv"))
    assert res.returncode == 2
    assert "sigma" in res.stderr
    res = _run_cli("run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.csv"))
    assert res.returncode == 2


def test_cli_verify_suite(tmp_path):
    res = _run_cli("verify", "--suite", "reduction")
    assert res.returncode == 0, res.stderr
    assert "PASS reduction.cost_decomposition" in res.stdout


def test_cli_verify_failure_exit_code(monkeypatch):
    from smoothmatch import cli

    def fake_verify(suite, seed=0):
        return [ex.CheckResult("fake.check", 1, -1.0, False)]

    monkeypatch.setattr(ex, "verify_bounds", fake_verify)
    assert cli.main(["verify", "--suite", "pb"]) == 1


def test_cli_scaling(tmp_path):
    out = tmp_path / "scaling.csv"
    res = _run_cli(
        "scaling", "--d", "1", "--sigma", "1.0", "--algorithm", "greedy",
        "--n-list", "16,32,64", "--trials", "3", "--out", str(out),
    )
    assert res.returncode == 0, res.stderr
    assert "cost_opt slope" in res.stdout
    assert out.exists()
    res = _run_cli(
        "scaling", "--d", "1", "--sigma", "1.0", "--algorithm", "greedy",
        "--n-list", "16,32", "--trials", "3", "--out", str(out),
    )
    assert res.returncode == 2
