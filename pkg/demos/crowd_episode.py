"""Robot crossing the circle among five social-force pedestrians.

Usage: python demos/crowd_episode.py [seed]
Prints the robot's metrics and those of the same robot with risk switched off.
"""

import sys
from dataclasses import replace
from pathlib import Path

from brne.cli import _crowd_trial, load_config
from brne.risk import RiskParams

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = load_config(str(Path(__file__).resolve().parents[1] / "configs" / "crowdnav.toml"))
n = cfg.n_agents[0]

for label, c in (("planner", cfg), ("risk off", replace(cfg, risk=RiskParams(scale=0.0)))):
    trace, empty, straight = _crowd_trial((c, n, seed))
    m = trace.metrics
    print(f"{label:>8}: collided={m.collided} closest pedestrian {m.safety_distance:.2f} m, "
          f"path {m.path_lengths[0]:.2f} m (straight {straight:.2f}), time {m.time_to_goal:.1f} s "
          f"(empty world {empty:.1f} s)")
