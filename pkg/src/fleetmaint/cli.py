"""Command-line front end: simulation, optimization, evaluation, tuning.

Five subcommand-style modes share one flag set:

* ``simulate``        one exact trajectory, written as CSV;
* ``optimize-app``    decomposition fixed point, strategy + history files;
* ``optimize-direct`` direct-search on the full exact sample-average
                      objective (the gradient-free reference arm);
* ``evaluate``        score a strategy file on fresh validation scenarios;
* ``tune``            Latin-hypercube search over the six decomposition
                      parameters on a small system.

Every mode is a deterministic function of (config, seed, flags).  Errors
map to distinct exit codes so scripts can tell a bad config from a bad
output directory.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .config import SystemConfig, ConfigError, load_config, small_system_config
from .sysmodel import (Strategy, Scenario, DimensionError, simulate,
                       trajectory_to_csv)
from .dsearch import SearchBudget, minimize
from . import appdecomp as ad
from . import evalharness as ev


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DIMENSION = 4
EXIT_OUTPUT = 5


@dataclass
class RunManifest:
    """Everything one run needs, resolved from flags."""

    mode: str
    config: str | None
    seed: int
    out: str
    iterations: int | None = None
    budget: int | None = None
    scenarios: int = 100
    validation_scenarios: int = 1000
    params: str | None = None
    strategy: str | None = None
    lhs_count: int = 8
    lhs_restarts: int = 20
    threads: int = 1

    MODES = ("simulate", "optimize-app", "optimize-direct", "evaluate",
             "tune")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValueError(f"unknown mode {self.mode!r}")


# ---------------------------------------------------------------------------
# strategy and parameter files


def save_strategy(strategy: Strategy, cfg: SystemConfig, path):
    """CSV strategy file: header with sizes, then T rows of n controls."""
    u = strategy.controls
    n, T = u.shape
    lines = [f"n={n},T={T},nu={cfg.nu:.17g}"]
    for t in range(T):
        lines.append(",".join(f"{u[i, t]:.17g}" for i in range(n)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_strategy(path) -> Strategy:
    lines = Path(path).read_text().strip().split("\n")
    header = dict(kv.split("=") for kv in lines[0].split(","))
    n, T = int(header["n"]), int(header["T"])
    if len(lines) != T + 1:
        raise DimensionError(f"expected {T} control rows, got {len(lines) - 1}")
    u = np.empty((n, T))
    for t, line in enumerate(lines[1:]):
        row = [float(v) for v in line.split(",")]
        if len(row) != n:
            raise DimensionError(f"row {t} has {len(row)} entries, wanted {n}")
        u[:, t] = row
    return Strategy(u)


_PARAM_KEYS = ("gamma_u0", "r_x", "r_s", "d_gamma", "alpha0", "d_alpha")


def save_params(p: ad.APPParams, path):
    data = {k: float(getattr(p, k)) for k in _PARAM_KEYS}
    data["iterations"] = p.iterations
    data["subproblem_budget"] = p.subproblem_budget
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))


def load_params(path) -> ad.APPParams:
    data = yaml.safe_load(Path(path).read_text())
    try:
        return ad.APPParams(**{k: data[k] for k in _PARAM_KEYS},
                            iterations=int(data.get("iterations", 50)),
                            subproblem_budget=int(
                                data.get("subproblem_budget", 1000)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Latin hypercube sampling


def lhs_sample(bounds, count: int, seed: int, restarts: int = 20):
    """Stratified samples of the six decomposition parameters.

    Each coordinate places exactly one point per equal-width stratum with
    independent stratum permutations.  Among ``restarts`` random designs
    the one with the largest minimum pairwise distance (in the unit cube)
    is kept.
    """
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    if count < 1 or restarts < 1:
        raise ValueError("count and restarts must be >= 1")
    for lo, hi in bounds:
        if not lo < hi:
            raise ValueError(f"invalid bounds interval ({lo}, {hi})")
    d = len(bounds)
    rng = np.random.default_rng(seed)
    best, best_sep = None, -np.inf
    for _ in range(restarts):
        unit = np.empty((count, d))
        for j in range(d):
            strata = rng.permutation(count)
            unit[:, j] = (strata + rng.random(count)) / count
        if count == 1:
            sep = np.inf
        else:
            diff = unit[:, None, :] - unit[None, :, :]
            dist = np.sqrt(np.sum(diff ** 2, axis=-1))
            sep = np.min(dist[np.triu_indices(count, k=1)])
        if sep > best_sep:
            best, best_sep = unit, sep
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    scaled = lo + best * (hi - lo)
    return [ad.APPParams(*row) for row in scaled]


# ---------------------------------------------------------------------------
# tuning


def _tune_one(payload):
    idx, cfg, p, noises, val, seed = payload
    strat, _ = ad.app_fixed_point(cfg, p, noises, seed=seed)
    projected = ev.project_strategy(strat, cfg.nu)
    cost = ev.saa_objective(projected, val, cfg, mode="exact")
    return idx, cost


def tune(cfg: SystemConfig, samples, noises, validation, seed: int,
         threads: int = 1):
    """Score each parameter sample and return (best, leaderboard).

    Every sample runs the decomposition on the same optimization scenarios;
    the projected strategies are compared on the shared validation set.
    The leaderboard is sorted by cost, ties broken by sample index.
    """
    payloads = [(idx, cfg, p, noises, validation, seed)
                for idx, p in enumerate(samples)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            scored = list(pool.map(_tune_one, payloads))
    else:
        scored = [_tune_one(pl) for pl in payloads]
    scored.sort(key=lambda r: r[0])
    leaderboard = sorted(
        ({"index": idx, "cost": cost, "params": samples[idx]}
         for idx, cost in scored),
        key=lambda rec: (rec["cost"], rec["index"]))
    return leaderboard[0]["params"], leaderboard


def leaderboard_to_csv(leaderboard, path):
    cols = ["rank", "index", "cost"] + list(_PARAM_KEYS)
    lines = [",".join(cols)]
    for rank, rec in enumerate(leaderboard):
        p = rec["params"]
        lines.append(",".join(
            [str(rank), str(rec["index"]), f"{rec['cost']:.17g}"]
            + [f"{getattr(p, k):.17g}" for k in _PARAM_KEYS]))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# modes


def _resolve_config(manifest: RunManifest) -> SystemConfig:
    if manifest.config is None:
        return small_system_config()
    return load_config(manifest.config)


def _resolve_params(manifest: RunManifest) -> ad.APPParams:
    p = (load_params(manifest.params) if manifest.params
         else ad.tuned_params())
    if manifest.iterations is not None:
        p.iterations = manifest.iterations
    if manifest.budget is not None:
        p.subproblem_budget = manifest.budget
    p.__post_init__()
    return p


def _run_simulate(manifest, cfg, out: Path):
    noises = ev.generate_scenarios(cfg.n, cfg.T, 1, manifest.seed)
    strategy = (load_strategy(manifest.strategy) if manifest.strategy
                else Strategy(np.zeros((cfg.n, cfg.T))))
    traj = simulate(strategy, Scenario(noises[0]), cfg)
    trajectory_to_csv(traj, cfg, out / "trajectory.csv")
    print(f"simulate: wrote {out / 'trajectory.csv'}")


def _run_optimize_app(manifest, cfg, out: Path):
    p = _resolve_params(manifest)
    noises = ev.generate_scenarios(cfg.n, cfg.T, manifest.scenarios,
                                   manifest.seed)
    print(f"optimize-app: surrogate dynamics, {p.iterations} iterations, "
          f"{manifest.scenarios} scenarios")
    strat, history = ad.app_fixed_point(cfg, p, noises, seed=manifest.seed,
                                        workers=manifest.threads)
    save_strategy(strat, cfg, out / "strategy.csv")
    save_strategy(ev.project_strategy(strat, cfg.nu), cfg,
                  out / "strategy_projected.csv")
    ad.history_to_csv(history, out / "history.csv", cfg.n)
    print(f"optimize-app: wrote {out / 'strategy.csv'}")


def _run_optimize_direct(manifest, cfg, out: Path):
    noises = ev.generate_scenarios(cfg.n, cfg.T, manifest.scenarios,
                                   manifest.seed)
    budget = manifest.budget if manifest.budget is not None else 1000
    print(f"optimize-direct: exact dynamics, budget {budget}, "
          f"{manifest.scenarios} scenarios")

    def objective(flat):
        return ev.saa_objective(Strategy(flat.reshape(cfg.n, cfg.T)),
                                noises, cfg, mode="exact")

    x0 = np.zeros(cfg.n * cfg.T)
    lo, hi = np.zeros_like(x0), np.ones_like(x0)
    x, f, evals = minimize(objective, x0, (lo, hi),
                           SearchBudget(max_evals=budget,
                                        seed=manifest.seed))
    strat = Strategy(x.reshape(cfg.n, cfg.T))
    save_strategy(strat, cfg, out / "strategy.csv")
    save_strategy(ev.project_strategy(strat, cfg.nu), cfg,
                  out / "strategy_projected.csv")
    print(f"optimize-direct: best {f:.6g} after {evals} evaluations")


def _run_evaluate(manifest, cfg, out: Path):
    if manifest.strategy is None:
        raise ConfigError("evaluate needs --strategy")
    strategy = load_strategy(manifest.strategy)
    scen = ev.generate_scenarios(cfg.n, cfg.T, manifest.validation_scenarios,
                                 manifest.seed)
    report = ev.evaluate_strategy(strategy, scen, cfg, project=True)
    ev.report_to_csv(report, out / "report.csv")
    (out / "report.txt").write_text(ev.report_to_text(report))
    ev.curves_to_csv(report, out / "pm_cumulative.csv",
                     out / "empty_stock.csv")
    print(ev.report_to_text(report), end="")


def _run_tune(manifest, cfg, out: Path):
    base = _resolve_params(manifest)
    samples = lhs_sample(ad.PARAM_BOUNDS, manifest.lhs_count, manifest.seed,
                         restarts=manifest.lhs_restarts)
    for p in samples:
        p.iterations = base.iterations
        p.subproblem_budget = base.subproblem_budget
    noises = ev.generate_scenarios(cfg.n, cfg.T, manifest.scenarios,
                                   manifest.seed)
    validation = ev.generate_scenarios(cfg.n, cfg.T,
                                       manifest.validation_scenarios,
                                       manifest.seed + 1)
    best, leaderboard = tune(cfg, samples, noises, validation,
                             seed=manifest.seed, threads=manifest.threads)
    leaderboard_to_csv(leaderboard, out / "leaderboard.csv")
    save_params(best, out / "best_params.yaml")
    print(f"tune: best cost {leaderboard[0]['cost']:.6g} "
          f"(sample {leaderboard[0]['index']})")


def run(manifest: RunManifest) -> int:
    """Execute one manifest; returns a process exit code."""
    try:
        cfg = _resolve_config(manifest)
        out = Path(manifest.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            probe = out / ".write_probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            print(f"error: output directory not writable: {exc}",
                  file=sys.stderr)
            return EXIT_OUTPUT
        dispatch = {
            "simulate": _run_simulate,
            "optimize-app": _run_optimize_app,
            "optimize-direct": _run_optimize_direct,
            "evaluate": _run_evaluate,
            "tune": _run_tune,
        }
        dispatch[manifest.mode](manifest, cfg, out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionError as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except OSError as exc:
        print(f"error: i/o failure: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetmaint",
        description="Fleet preventive-maintenance scheduling toolkit")
    parser.add_argument("--mode", required=True,
                        choices=RunManifest.MODES)
    parser.add_argument("--config", default=None,
                        help="system config file (default: built-in small "
                             "10-component system)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out",
                        help="output directory (created if missing)")
    parser.add_argument("--iterations", type=int, default=None,
                        help="fixed-point iterations override")
    parser.add_argument("--budget", type=int, default=None,
                        help="search budget (per subproblem, or total for "
                             "optimize-direct)")
    parser.add_argument("--scenarios", type=int, default=100,
                        help="optimization scenario count")
    parser.add_argument("--validation-scenarios", type=int, default=1000)
    parser.add_argument("--params", default=None,
                        help="decomposition parameter file (YAML)")
    parser.add_argument("--strategy", default=None,
                        help="strategy CSV (evaluate and simulate modes)")
    parser.add_argument("--lhs-count", type=int, default=8)
    parser.add_argument("--lhs-restarts", type=int, default=20)
    parser.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = RunManifest(
        mode=args.mode, config=args.config, seed=args.seed, out=args.out,
        iterations=args.iterations, budget=args.budget,
        scenarios=args.scenarios,
        validation_scenarios=args.validation_scenarios,
        params=args.params, strategy=args.strategy,
        lhs_count=args.lhs_count, lhs_restarts=args.lhs_restarts,
        threads=args.threads)
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
