"""Fixed grid, particle swarm and the two local solvers side by side.

The swarm searches the whole aperture and can place every antenna at the
same path length to the user, which makes all subcarriers add coherently.
The local solvers start at the compact grid and improve it in place.
"""

import numpy as np

from squintless import (
    PsoParams,
    SgdaParams,
    excess_distance,
    fpa_layout,
    gain_sq_grid,
    run_alg1,
    run_alg2,
    run_pso,
)
from squintless.config import ExperimentConfig

cfg = ExperimentConfig()
geom, array, grid = cfg.geometry(), cfg.array(), cfg.grid()
M = array.m_count
init = fpa_layout(array)

layouts = {
    "fixed grid": init,
    "MM sweeps": run_alg1(init, geom, array, grid).positions,
    "descent-ascent": run_alg2(init, geom, array, grid, SgdaParams(seed=0)).positions,
    "PSO (grid start)": run_pso(geom, array, grid, PsoParams(init="fpa")).positions,
    "PSO (random start)": run_pso(geom, array, grid, PsoParams()).positions,
}
for name, p in layouts.items():
    g = np.sqrt(gain_sq_grid(p, geom, grid).min()) / M
    spread = np.ptp(excess_distance(geom, p))
    print(f"{name:20s} worst g/M = {g:.6f}   path-length spread {1e3 * spread:8.4f} mm")
