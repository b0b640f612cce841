"""Command-line entry point: ``brne multiagent | crowdnav | verify | bench``.

Configuration is a TOML document with the sections ``[run]``, ``[scenario]``,
``[planner]``, ``[kernel]``, ``[risk]``, ``[solve]``, ``[pedestrians]``,
``[verify]`` and ``[bench]``. Every key has a default in code, file values
override defaults and command-line flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, fields, replace
from multiprocessing import Pool
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import oracle
from .gp import KernelSpec, goal_nominal
from .nav import PlannerConfig
from .risk import RiskParams, configure_threads
from .sim import (
    SCHEMA_VERSION,
    Planner,
    PlaybackParseError,
    ScenarioConfig,
    ScriptedPedestrians,
    SocialForcePedestrians,
    load_playback,
    make_scenario,
    run_episode,
    run_multiagent_episode,
    Scenario,
)
from .solver import SolveConfig, solve, solve_samples
from .strategy import SampledMixedStrategy

log = logging.getLogger("brne")

SUMMARY_SCHEMA = "brne-summary/1"
BENCH_SCHEMA = "brne-bench/1"
VERIFY_SCHEMA = "brne-verify/1"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    trials: int = 100
    seed: int = 0
    out: str = "out"
    workers: int = 1
    threads: int = 1
    # unset: multiagent sweeps 4..8 agents, crowdnav uses 5 pedestrians
    n_agents: list[int] | None = None
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    risk: RiskParams = field(default_factory=RiskParams)
    solve: SolveConfig = field(default_factory=SolveConfig)
    pedestrians: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)


VERIFY_DEFAULTS = {
    "games": 100,
    "game_seed": 0,
    "circle_trials": 100,
    "circle_samples": 200,
    "descent_samples": 500,
    "descent_trials": 10,
    "exponent_sign": -1.0,
    "n_agents": [4, 5, 6, 7, 8],
}

BENCH_DEFAULTS = {
    "n_agents": [4, 5, 6, 7, 8],
    "samples": [100, 200, 300, 400, 500],
    "horizon_steps": 50,
    "dt": 0.1,
    "repeats": 20,
    "iterations": 10,
}

PEDESTRIAN_DEFAULTS = {
    "model": "social-force",
    "playback_file": "",
    "relaxation_time": 0.5,
    "repulsion_strength": 5.0,
    "repulsion_range": 0.5,
    "accel_cap": 5.0,
}


def _build(cls, section: dict, name: str, **extra):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    try:
        return cls(**{**section, **extra})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def _merge(defaults: dict, section: dict, name: str) -> dict:
    unknown = set(section) - set(defaults)
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    return {**defaults, **section}


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    doc = {}
    if path:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    known = {"run", "scenario", "planner", "kernel", "risk", "solve", "pedestrians", "verify", "bench"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    run = dict(doc.get("run", {}))
    for k, v in (overrides or {}).items():
        if v is not None:
            run[k] = v
    mode = run.pop("mode", None)
    scen = dict(doc.get("scenario", {}))
    n_agents = scen.pop("n_agents", None)
    if isinstance(n_agents, int):
        n_agents = [n_agents]
    if n_agents is not None:
        scen["n_agents"] = int(n_agents[0])
    kernel = _build(KernelSpec, doc.get("kernel", {}), "kernel")
    solve_sec = dict(doc.get("solve", {}))
    if mode is not None:
        solve_sec["mode"] = mode
    cfg = RunConfig(
        n_agents=None if n_agents is None else [int(n) for n in n_agents],
        scenario=_build(ScenarioConfig, scen, "scenario"),
        planner=_build(PlannerConfig, doc.get("planner", {}), "planner", kernel=kernel),
        risk=_build(RiskParams, doc.get("risk", {}), "risk"),
        solve=_build(SolveConfig, solve_sec, "solve"),
        pedestrians=_merge(PEDESTRIAN_DEFAULTS, doc.get("pedestrians", {}), "pedestrians"),
        verify=_merge(VERIFY_DEFAULTS, doc.get("verify", {}), "verify"),
        bench=_merge(BENCH_DEFAULTS, doc.get("bench", {}), "bench"),
    )
    for key in ("trials", "seed", "out", "workers", "threads"):
        if key in run:
            setattr(cfg, key, type(getattr(cfg, key))(run.pop(key)))
    if run:
        raise ConfigError(f"[run] unknown keys: {sorted(run)}")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    return cfg


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.6f}"


def _write_csv(path: Path, schema: str, header, rows) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# schema {schema}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])


def _mean_std(values):
    a = np.asarray([v for v in values if not (isinstance(v, float) and math.isnan(v))], dtype=float)
    if a.size == 0:
        return float("nan"), float("nan")
    return float(a.mean()), float(a.std())


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with Pool(workers) as pool:
            return pool.map(fn, jobs)
    return [fn(j) for j in jobs]


# --- multiagent -----------------------------------------------------------------


def _multiagent_trial(job):
    cfg, n, k = job
    seed = cfg.seed + k
    configure_threads(cfg.threads)
    scen_cfg = replace(cfg.scenario, n_agents=n, rng_seed=seed, kind="circle")
    scenario = make_scenario(scen_cfg)
    planner = Planner(cfg.planner, cfg.risk, cfg.solve, seed)
    trace = run_multiagent_episode(scenario, planner, scen_cfg)
    return trace


MULTIAGENT_COUNTS = [4, 5, 6, 7, 8]
CROWD_PEDESTRIANS = 5

MULTIAGENT_TRIAL_COLUMNS = [
    "n_agents", "trial", "seed", "collided", "safety_distance", "max_path_length", "time_to_goal", "froze",
]
MULTIAGENT_SUMMARY_COLUMNS = [
    "n_agents", "trials", "mode", "collision_rate", "safety_distance_mean", "safety_distance_std",
    "max_path_length_mean", "max_path_length_std", "frozen_rate",
]


def run_multiagent(cfg: RunConfig, write_traces: bool = True):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    # fail fast on infeasible packing before spawning work
    counts = cfg.n_agents or MULTIAGENT_COUNTS
    for n in counts:
        make_scenario(replace(cfg.scenario, n_agents=n, rng_seed=cfg.seed, kind="circle"))
    jobs = [(cfg, n, k) for n in counts for k in range(cfg.trials)]
    traces = _map(_multiagent_trial, jobs, cfg.workers)
    trial_rows, summary = [], []
    for n in counts:
        ms = []
        for (c, nn, k), tr in zip(jobs, traces):
            if nn != n:
                continue
            m = tr.metrics
            ms.append(m)
            trial_rows.append([n, k, cfg.seed + k, m.collided, m.safety_distance, m.max_path_length,
                               m.time_to_goal, m.froze])
            if write_traces:
                tdir = out / "traces"
                tdir.mkdir(exist_ok=True)
                tr.write_json(tdir / f"multiagent_n{n}_trial{k:04d}.json")
        sd = _mean_std([m.safety_distance for m in ms])
        pl = _mean_std([m.max_path_length for m in ms])
        summary.append([n, len(ms), cfg.solve.mode, float(np.mean([m.collided for m in ms])), sd[0], sd[1],
                        pl[0], pl[1], float(np.mean([m.froze for m in ms]))])
    _write_csv(out / "multiagent_trials.csv", SUMMARY_SCHEMA, MULTIAGENT_TRIAL_COLUMNS, trial_rows)
    _write_csv(out / "multiagent_summary.csv", SUMMARY_SCHEMA, MULTIAGENT_SUMMARY_COLUMNS, summary)
    return summary


# --- crowdnav -------------------------------------------------------------------


def _pedestrian_model(cfg: RunConfig):
    p = cfg.pedestrians
    sc = cfg.scenario
    if p["model"] == "social-force":
        return SocialForcePedestrians(
            desired_speed=sc.desired_speed,
            relaxation_time=p["relaxation_time"],
            repulsion_strength=p["repulsion_strength"],
            repulsion_range=p["repulsion_range"],
            body_radius=sc.body_radius,
            accel_cap=p["accel_cap"],
        )
    if p["model"] == "scripted":
        return ScriptedPedestrians(sc.desired_speed)
    if p["model"] == "playback":
        if not p["playback_file"]:
            raise ConfigError("pedestrians.playback_file is required for the playback model")
        return load_playback(p["playback_file"], sc.control_dt)
    raise ConfigError(f"unknown pedestrian model {p['model']!r}")


def _crowd_scenario(cfg: RunConfig, seed: int, n: int):
    # n counts pedestrians; the robot is agent 0 on top of them
    sc = replace(cfg.scenario, n_agents=n + 1, rng_seed=seed)
    if cfg.pedestrians["model"] == "playback":
        # pedestrians come from the file; the scenario only places the robot
        sc = replace(sc, kind="circle", n_agents=1)
    return sc, make_scenario(sc)


def _crowd_trial(job):
    cfg, n, k = job
    seed = cfg.seed + k
    configure_threads(cfg.threads)
    sc, scenario = _crowd_scenario(cfg, seed, n)
    model = _pedestrian_model(cfg)
    planner = Planner(cfg.planner, cfg.risk, cfg.solve, seed)
    trace = run_episode(scenario, planner, model, sc)
    alone = run_episode(Scenario(scenario.starts[:1], scenario.goals[:1]), planner,
                        ScriptedPedestrians(sc.desired_speed), sc, record_plans=False)
    straight = float(np.hypot(*(scenario.goals[0] - scenario.starts[0])))
    return trace, alone.metrics.time_to_goal, straight


CROWD_TRIAL_COLUMNS = [
    "trial", "seed", "collided", "safety_distance", "time_to_goal", "path_length", "path_ratio",
    "froze", "closing_agent", "empty_time_to_goal",
]
CROWD_SUMMARY_COLUMNS = [
    "trials", "mode", "pedestrian_model", "collision_rate", "safety_distance_mean", "safety_distance_std",
    "time_to_goal_mean", "time_to_goal_std", "path_length_mean", "path_length_std", "path_ratio_mean",
    "frozen_rate", "empty_time_to_goal_mean",
]


def run_crowdnav(cfg: RunConfig, write_traces: bool = True):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _pedestrian_model(cfg)  # surface config/file errors before any work
    n = cfg.n_agents[0] if cfg.n_agents else CROWD_PEDESTRIANS
    jobs = [(cfg, n, k) for k in range(cfg.trials)]
    results = _map(_crowd_trial, jobs, cfg.workers)
    rows = []
    for k, (trace, empty_t, straight) in enumerate(results):
        m = trace.metrics
        length = m.path_lengths[0]
        rows.append([k, cfg.seed + k, m.collided, m.safety_distance, m.time_to_goal, length,
                     length / straight if straight > 0 else float("nan"), m.froze,
                     "" if m.closing_agent is None else str(m.closing_agent), empty_t])
        if write_traces:
            tdir = out / "traces"
            tdir.mkdir(exist_ok=True)
            trace.write_json(tdir / f"crowdnav_trial{k:04d}.json")
            trace.write_csv(tdir / f"crowdnav_trial{k:04d}.csv")
    col = lambda j: [r[j] for r in rows]  # noqa: E731
    sd, ttg, pl = _mean_std(col(3)), _mean_std(col(4)), _mean_std(col(5))
    summary = [[len(rows), cfg.solve.mode, cfg.pedestrians["model"], float(np.mean(col(2))), sd[0], sd[1],
                ttg[0], ttg[1], pl[0], pl[1], _mean_std(col(6))[0], float(np.mean(col(7))),
                _mean_std(col(9))[0]]]
    _write_csv(out / "crowdnav_trials.csv", SUMMARY_SCHEMA, CROWD_TRIAL_COLUMNS, rows)
    _write_csv(out / "crowdnav_summary.csv", SUMMARY_SCHEMA, CROWD_SUMMARY_COLUMNS, summary)
    return summary


# --- verify ---------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


def game_shape(seed: int):
    """Agent and strategy counts of the verification game with this seed."""
    rng = np.random.default_rng([seed, 7])
    return int(rng.integers(2, 5)), int(rng.integers(2, 6))


def discrete_suite(n_games: int, base_seed: int = 0, sign: float = -1.0) -> list[Check]:
    """Descent, fixed point, Nash, risk bound and oracle equivalence on random games."""
    descent = fixed = nash = bound = equiv = -np.inf
    for g in range(n_games):
        seed = base_seed + g
        N, K = game_shape(seed)
        game = oracle.random_game(seed, N, K)
        sol = oracle.exact_solve(game, sign=sign)
        tr = np.asarray(sol.free_energy_trace)
        descent = max(descent, float(np.max(np.diff(tr))) if tr.size > 1 else 0.0)
        step = max(
            float(np.max(np.abs(oracle.exact_posterior(game, i, sol.strategies) - sol.strategies[i])))
            for i in range(N)
        )
        fixed = max(fixed, step)
        nash = max(nash, oracle.nash_verify(game, sol.strategies, trials=100, seed=seed).max_violation)
        lhs = oracle.joint_risk(game, list(game.nominals)) - oracle.joint_risk(game, sol.strategies)
        rhs = sum(oracle.kl_divergence(p, q) for p, q in zip(sol.strategies, game.nominals))
        bound = max(bound, rhs - lhs)
        strategies, fn = oracle.as_sampled(game)
        n_sweeps = min(sol.iterations, 200)
        res = solve_samples(strategies, SolveConfig(max_iterations=n_sweeps, tolerance=1e-300),
                            RiskParams(), fn, record_history=True, exponent_sign=sign)
        for k, ws in enumerate(res.weights_history):
            for i in range(N):
                equiv = max(equiv, float(np.max(np.abs(ws[i] / K - sol.history[k][i]))))
    return [
        Check("exact descent", descent <= 1e-10, 1e-10 - descent, f"max F increase {descent:.3e}"),
        Check("fixed point", fixed < 1e-10, 1e-10 - fixed, f"max posterior change {fixed:.3e}"),
        Check("nash", nash <= 1e-8, 1e-8 - nash, f"max violation {nash:.3e}"),
        Check("risk bound", bound <= 1e-10, 1e-10 - bound, f"max KL - reduction {bound:.3e}"),
        Check("oracle equivalence", equiv <= 1e-9, 1e-9 - equiv, f"max weight error {equiv:.3e}"),
    ]


def circle_nominals(n: int, seed: int, planner: PlannerConfig, scenario: ScenarioConfig):
    sc = replace(scenario, n_agents=n, rng_seed=seed, kind="circle")
    scen = make_scenario(sc)
    return [
        goal_nominal(s, g, planner.nominal_speed, planner.grid, planner.kernel, planner.start_std, planner.end_std,
                     planner.hold_at_goal)
        for s, g in zip(scen.starts, scen.goals)
    ]


def descent_check(cfg: RunConfig, trials: int, M: int, sign: float = -1.0) -> Check:
    worst = -np.inf
    for n in cfg.verify["n_agents"]:
        for k in range(trials):
            seed = cfg.seed + k
            noms = circle_nominals(n, seed, cfg.planner, cfg.scenario)
            rngs = [np.random.default_rng([seed, i]) for i in range(n)]
            strategies = [SampledMixedStrategy(nm.draw(M, r), np.ones(M), nm.grid) for nm, r in zip(noms, rngs)]
            res = solve_samples(strategies, SolveConfig(max_iterations=20, tolerance=1e-300), cfg.risk,
                                exponent_sign=sign)
            tr = np.asarray(res.free_energy_trace)
            rel = np.diff(tr) / np.maximum(np.abs(tr[:-1]), 1.0)
            worst = max(worst, float(rel.max()))
    return Check("sampled descent", worst <= 1e-9, 1e-9 - worst, f"max relative F increase {worst:.3e}")


def convergence_histogram(cfg: RunConfig, trials: int, M: int):
    """Sweeps to relative-F tolerance 1e-4 (capped at 10) per agent count."""
    hist = {}
    sc = SolveConfig(max_iterations=10, tolerance=1e-4, mode="is")
    for n in cfg.verify["n_agents"]:
        counts = []
        for k in range(trials):
            seed = cfg.seed + k
            res = solve(circle_nominals(n, seed, cfg.planner, cfg.scenario), sc, cfg.risk, seed, M=M)
            counts.append(res.iterations_used if res.converged else 11)
        hist[n] = counts
    return hist


def run_verify(cfg: RunConfig):
    v = cfg.verify
    sign = float(v["exponent_sign"])
    checks = discrete_suite(int(v["games"]), int(v["game_seed"]), sign)
    checks.append(descent_check(cfg, int(v["descent_trials"]), int(v["descent_samples"]), sign))
    hist = convergence_histogram(cfg, int(v["circle_trials"]), int(v["circle_samples"]))
    for n, counts in hist.items():
        frac = float(np.mean(np.asarray(counts) <= 10))
        checks.append(Check(f"converged within 10 sweeps, N={n}", frac >= 0.95, frac - 0.95,
                            f"{frac:.0%} of {len(counts)} trials"))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"# schema {VERIFY_SCHEMA}"]
    for c in checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<36} margin {c.margin:+.3e}  {c.detail}")
    lines.append("sweeps-to-converge histogram (11 = not within 10):")
    for n, counts in hist.items():
        bins = np.bincount(np.asarray(counts), minlength=12)[1:]
        lines.append(f"  N={n}: " + " ".join(str(int(b)) for b in bins))
    (out / "verify_report.txt").write_text("\n".join(lines) + "\n")
    report = {
        "schema": VERIFY_SCHEMA,
        "checks": [c.__dict__ for c in checks],
        "sweeps_to_converge": {str(n): c for n, c in hist.items()},
    }
    (out / "verify_report.json").write_text(json.dumps(report, indent=1, default=float))
    print("\n".join(lines))
    return all(c.passed for c in checks), checks


# --- bench ----------------------------------------------------------------------


def time_solves(n, M, T, dt, repeats, iterations, params, kernel, threads, seed=0):
    """Median and mean wall time of warm fixed-iteration solves (seconds)."""
    configure_threads(threads)
    planner = PlannerConfig(horizon_steps=T, dt=dt, replan_period=dt, kernel=kernel)
    noms = circle_nominals(n, seed, planner, ScenarioConfig(n_agents=n))
    sc = SolveConfig(max_iterations=iterations, tolerance=1e-300)
    solve(noms, sc, params, seed, M=M)  # warm-up / compile
    ts = []
    for r in range(repeats):
        t0 = time.perf_counter()
        solve(noms, sc, params, seed + r, M=M)
        ts.append(time.perf_counter() - t0)
    configure_threads(1)
    return float(np.median(ts)), float(np.mean(ts)), float(np.std(ts))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def run_bench(cfg: RunConfig):
    b = cfg.bench
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    thread_set = [1] + ([cfg.threads] if cfg.threads > 1 else [])
    rows = []
    table = {}
    for threads in thread_set:
        for n in b["n_agents"]:
            for M in b["samples"]:
                med, mean, std = time_solves(n, M, int(b["horizon_steps"]), float(b["dt"]), int(b["repeats"]),
                                             int(b["iterations"]), cfg.risk, cfg.planner.kernel, threads,
                                             cfg.seed)
                table[(threads, n, M)] = med
                rows.append([n, M, int(b["horizon_steps"]), threads, med * 1e3, mean * 1e3, std * 1e3])
                print(f"N={n} M={M} threads={threads}: median {med * 1e3:.2f} ms", flush=True)
    _write_csv(out / "bench_timing.csv", BENCH_SCHEMA,
               ["n_agents", "samples", "horizon_steps", "threads", "median_ms", "mean_ms", "std_ms"], rows)
    fits = []
    for threads in thread_set:
        for M in b["samples"]:
            ns = b["n_agents"]
            fits.append(["vs_n_agents", threads, f"M={M}", loglog_slope(ns, [table[(threads, n, M)] for n in ns])])
        for n in b["n_agents"]:
            ms = b["samples"]
            fits.append(["vs_samples", threads, f"N={n}", loglog_slope(ms, [table[(threads, n, M)] for M in ms])])
    _write_csv(out / "bench_fit.csv", BENCH_SCHEMA, ["fit", "threads", "fixed", "loglog_slope"], fits)
    for f in fits:
        print(f"slope {f[0]} threads={f[1]} {f[2]}: {f[3]:.3f}")
    return rows, fits


# --- entry point ----------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="brne", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("multiagent", "circle benchmark with every agent planning jointly"),
        ("crowdnav", "robot among simulated or replayed pedestrians"),
        ("verify", "equilibrium property suite"),
        ("bench", "solve-time scaling study"),
    ]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="TOML config file")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int, help="base seed; trial k uses seed + k")
        s.add_argument("--trials", type=int, help="trials per setting")
        s.add_argument("--mode", choices=["is", "rs"], help="sample representation")
        s.add_argument("--threads", type=int, help="threads for the risk kernel")
        s.add_argument("--workers", type=int, help="trial worker processes")
        if name == "verify":
            s.add_argument("--exponent-sign", type=float, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in ("out", "seed", "trials", "mode", "threads", "workers")}
    try:
        cfg = load_config(args.config, overrides)
        if getattr(args, "exponent_sign", None) is not None:
            cfg.verify["exponent_sign"] = args.exponent_sign
        configure_threads(cfg.threads)
        if args.command == "multiagent":
            run_multiagent(cfg)
        elif args.command == "crowdnav":
            run_crowdnav(cfg)
        elif args.command == "verify":
            ok, _ = run_verify(cfg)
            return 0 if ok else 1
        else:
            run_bench(cfg)
    except (ConfigError, PlaybackParseError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"brne {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
