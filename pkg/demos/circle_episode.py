"""One closed-loop circle episode with every agent planning jointly.

Usage: python demos/circle_episode.py [n_agents] [seed] [config]
Writes the trace to out/demo_circle.json and prints the metrics.
"""

import sys
from dataclasses import replace
from pathlib import Path

from brne.cli import load_config
from brne.sim import Planner, make_scenario, run_multiagent_episode

n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
path = sys.argv[3] if len(sys.argv) > 3 else str(Path(__file__).resolve().parents[1] / "configs" / "multiagent_is.toml")

cfg = load_config(path)
sc = replace(cfg.scenario, n_agents=n, rng_seed=seed, kind="circle")
trace = run_multiagent_episode(make_scenario(sc), Planner(cfg.planner, cfg.risk, cfg.solve, seed), sc,
                               record_plans=True)
m = trace.metrics
Path("out").mkdir(exist_ok=True)
trace.write_json("out/demo_circle.json")
print(f"{n} agents, {cfg.solve.mode}: collided={m.collided} safety distance {m.safety_distance:.2f} m, "
      f"max path {m.max_path_length:.2f} m, all arrived in {m.time_to_goal:.1f} s, froze={m.froze}")
