"""Beam squint on a fixed grid array.

A 4x4 grid at half-wavelength spacing is steered at the center tone. Its
gain is M there and drops toward both band edges, symmetrically, because
the squared gain depends on the frequency offset only through its square
near the center.
"""

import numpy as np

from squintless.config import ExperimentConfig
from squintless import array_gain, fpa_layout

cfg = ExperimentConfig()
geom, array, grid = cfg.geometry(), cfg.array(), cfg.grid()
p = fpa_layout(array)

f = grid.freqs
g = array_gain(p, geom, grid, f) / array.m_count
print("normalized gain of the 4x4 grid")
for l in range(0, grid.l_count + 1, 32):
    print(f"  f = {f[l] / 1e9:7.4f} GHz   g/M = {g[l]:.6f}")
print(f"worst subcarrier: {g.min():.6f} at {f[np.argmin(g)] / 1e9:.4f} GHz")

# the same grid stretched over a wider aperture squints much more
wide = 8 * p
gw = array_gain(wide, geom, grid, f) / array.m_count
print(f"grid stretched 8x: worst normalized gain {gw.min():.4f}")
