"""Descent-ascent with the frequency as the adversary.

For each antenna, the position climbs the smoothed squared gain while the
frequency slides toward the band's worst point. Seeds only affect where
each inner loop starts in frequency.
"""

import numpy as np

from squintless import SgdaParams, fpa_layout, run_alg2
from squintless.config import ExperimentConfig

cfg = ExperimentConfig()
geom, array, grid = cfg.geometry(), cfg.array(), cfg.grid()

for seed in range(3):
    state = run_alg2(fpa_layout(array), geom, array, grid, SgdaParams(seed=seed), cfg.stopping_rule())
    inner = np.array(state.inner_iters)
    print(f"seed {seed}: {state.iteration} sweeps, min g^2 {state.objective_trace[0]:.6f} -> "
          f"{state.objective:.6f}, inner loop length median {int(np.median(inner))}, max {inner.max()}")
