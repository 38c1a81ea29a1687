"""Command-line front end: files, sampling, tuning, mode dispatch."""
import numpy as np
import pytest

from fleetmaint.config import SystemConfig, save_config, small_system_config
from fleetmaint import appdecomp as ad
from fleetmaint import cli
from fleetmaint import evalharness as ev
from fleetmaint.sysmodel import Strategy


def small_cfg(**kw):
    base = dict(n=2, T=3, D=2, s_init=1, C_F=10000.0, C_P=50.0, C_C=200.0,
                weibull_shape=3.0, weibull_scale=10.0)
    base.update(kw)
    return SystemConfig(**base)


# ---------------------------------------------------------------------------
# file round-trips


def test_strategy_roundtrip(tmp_path):
    cfg = small_cfg()
    u = np.random.default_rng(0).random((2, 3))
    path = tmp_path / "strategy.csv"
    cli.save_strategy(Strategy(u), cfg, path)
    back = cli.load_strategy(path)
    assert np.array_equal(back.controls, u)
    header = path.read_text().split("\n")[0]
    assert header.startswith("n=2,T=3,nu=")


def test_strategy_file_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("n=2,T=3,nu=0.9\n0.1,0.2\n")
    with pytest.raises(Exception):
        cli.load_strategy(path)


def test_params_roundtrip(tmp_path):
    p = ad.tuned_params(iterations=7, subproblem_budget=42)
    path = tmp_path / "params.yaml"
    cli.save_params(p, path)
    back = cli.load_params(path)
    assert back == p


def test_params_file_rejects_garbage(tmp_path):
    path = tmp_path / "params.yaml"
    path.write_text("gamma_u0: -3\n")
    with pytest.raises(Exception):
        cli.load_params(path)


# ---------------------------------------------------------------------------
# Latin hypercube sampling


def test_lhs_stratification():
    bounds = [(0.0, 1.0)] * 6
    samples = cli.lhs_sample(bounds, 4, seed=1, restarts=3)
    arr = np.array([p.vector for p in samples])
    assert arr.shape == (4, 6)
    for j in range(6):
        strata = np.sort(np.floor(arr[:, j] * 4).astype(int))
        assert np.array_equal(strata, [0, 1, 2, 3])


def test_lhs_respects_bounds():
    samples = cli.lhs_sample(ad.PARAM_BOUNDS, 10, seed=2)
    for p in samples:
        for val, (lo, hi) in zip(p.vector, ad.PARAM_BOUNDS):
            assert lo <= val <= hi


def test_lhs_deterministic():
    a = cli.lhs_sample(ad.PARAM_BOUNDS, 5, seed=9)
    b = cli.lhs_sample(ad.PARAM_BOUNDS, 5, seed=9)
    assert all(np.array_equal(x.vector, y.vector) for x, y in zip(a, b))


def test_lhs_maximin_improves_separation():
    bounds = [(0.0, 1.0)] * 6

    def min_sep(samples):
        arr = np.array([p.vector for p in samples])
        d = np.sqrt(((arr[:, None] - arr[None, :]) ** 2).sum(-1))
        iu = np.triu_indices(len(samples), k=1)
        return d[iu].min()

    one = cli.lhs_sample(bounds, 8, seed=3, restarts=1)
    many = cli.lhs_sample(bounds, 8, seed=3, restarts=40)
    assert min_sep(many) >= min_sep(one)


def test_lhs_validation():
    with pytest.raises(ValueError):
        cli.lhs_sample([(0.0, 1.0)] * 6, 0, seed=1)
    with pytest.raises(ValueError):
        cli.lhs_sample([(1.0, 0.0)] * 6, 2, seed=1)


# ---------------------------------------------------------------------------
# tuning


def test_tune_single_sample_wins():
    cfg = small_cfg()
    noises = ev.generate_scenarios(2, 3, 4, seed=0)
    val = ev.generate_scenarios(2, 3, 10, seed=1)
    p = ad.tuned_params(iterations=1, subproblem_budget=5)
    best, board = cli.tune(cfg, [p], noises, val, seed=0)
    assert best is p
    assert len(board) == 1 and board[0]["index"] == 0


def test_tune_leaderboard_sorted():
    cfg = small_cfg(n=3, T=4)
    noises = ev.generate_scenarios(3, 4, 5, seed=0)
    val = ev.generate_scenarios(3, 4, 20, seed=1)
    samples = cli.lhs_sample(ad.PARAM_BOUNDS, 3, seed=5)
    for p in samples:
        p.iterations, p.subproblem_budget = 2, 15
    best, board = cli.tune(cfg, samples, noises, val, seed=0)
    costs = [rec["cost"] for rec in board]
    assert costs == sorted(costs)
    assert best is samples[board[0]["index"]]


def test_tune_threaded_matches_serial():
    cfg = small_cfg()
    noises = ev.generate_scenarios(2, 3, 3, seed=0)
    val = ev.generate_scenarios(2, 3, 10, seed=1)
    samples = cli.lhs_sample(ad.PARAM_BOUNDS, 2, seed=7)
    for p in samples:
        p.iterations, p.subproblem_budget = 1, 8
    _, b1 = cli.tune(cfg, samples, noises, val, seed=0, threads=1)
    _, b2 = cli.tune(cfg, samples, noises, val, seed=0, threads=2)
    assert [(r["index"], r["cost"]) for r in b1] \
        == [(r["index"], r["cost"]) for r in b2]


# ---------------------------------------------------------------------------
# run() dispatch


def write_cfg(tmp_path, cfg):
    path = tmp_path / "config.yaml"
    save_config(cfg, path)
    return str(path)


def test_simulate_reproducible(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    for sub in ("a", "b"):
        rc = cli.run(cli.RunManifest(mode="simulate", config=cfg_path,
                                     seed=3, out=str(tmp_path / sub)))
        assert rc == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a == b


def test_optimize_direct_budget_one(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    rc = cli.run(cli.RunManifest(mode="optimize-direct", config=cfg_path,
                                 seed=1, out=str(tmp_path / "o"),
                                 budget=1, scenarios=3))
    assert rc == 0
    strat = cli.load_strategy(tmp_path / "o" / "strategy.csv")
    assert np.all(strat.controls == 0.0)


def test_optimize_app_writes_artifacts(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    rc = cli.run(cli.RunManifest(mode="optimize-app", config=cfg_path,
                                 seed=1, out=str(tmp_path / "o"),
                                 iterations=2, budget=10, scenarios=3))
    assert rc == 0
    out = tmp_path / "o"
    strat = cli.load_strategy(out / "strategy.csv")
    assert strat.controls.shape == (2, 3)
    proj = cli.load_strategy(out / "strategy_projected.csv")
    assert set(np.unique(proj.controls)) <= {0.0, 1.0}
    assert (out / "history.csv").exists()


def test_evaluate_mode(tmp_path):
    cfg = small_cfg()
    cfg_path = write_cfg(tmp_path, cfg)
    spath = tmp_path / "strategy.csv"
    cli.save_strategy(Strategy(np.zeros((2, 3))), cfg, spath)
    rc = cli.run(cli.RunManifest(mode="evaluate", config=cfg_path, seed=2,
                                 out=str(tmp_path / "o"),
                                 strategy=str(spath),
                                 validation_scenarios=30))
    assert rc == 0
    out = tmp_path / "o"
    for name in ("report.csv", "report.txt", "pm_cumulative.csv",
                 "empty_stock.csv"):
        assert (out / name).exists()


def test_evaluate_requires_strategy(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    rc = cli.run(cli.RunManifest(mode="evaluate", config=cfg_path, seed=2,
                                 out=str(tmp_path / "o")))
    assert rc == cli.EXIT_CONFIG


def test_tune_mode(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    rc = cli.run(cli.RunManifest(mode="tune", config=cfg_path, seed=4,
                                 out=str(tmp_path / "o"), iterations=1,
                                 budget=5, scenarios=3,
                                 validation_scenarios=10, lhs_count=2,
                                 lhs_restarts=2))
    assert rc == 0
    board = (tmp_path / "o" / "leaderboard.csv").read_text().strip()
    assert len(board.split("\n")) == 3
    best = cli.load_params(tmp_path / "o" / "best_params.yaml")
    assert isinstance(best, ad.APPParams)


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("n: -5\n")
    rc = cli.run(cli.RunManifest(mode="simulate", config=str(bad), seed=0,
                                 out=str(tmp_path / "o")))
    assert rc == cli.EXIT_CONFIG


def test_unwritable_output_exit_code(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    blocker = tmp_path / "blocked"
    blocker.write_text("not a directory")
    rc = cli.run(cli.RunManifest(mode="simulate", config=cfg_path, seed=0,
                                 out=str(blocker)))
    assert rc == cli.EXIT_OUTPUT


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        cli.RunManifest(mode="explode", config=None, seed=0, out="x")


def test_main_entry(tmp_path):
    cfg_path = write_cfg(tmp_path, small_cfg())
    rc = cli.main(["--mode", "simulate", "--config", cfg_path,
                   "--seed", "1", "--out", str(tmp_path / "o")])
    assert rc == 0


def test_default_config_is_small_system():
    cfg = small_system_config()
    assert cfg.n == 10 and cfg.s_init == 2
