"""Time per sweep as the number of subcarriers grows.

The MM subproblem carries one cone per subcarrier, so its cost grows with
L. The descent-ascent loop touches a single frequency per step and barely
notices L.
"""

from squintless.config import ExperimentConfig
from squintless.harness import bench_runtime

for L, a1, a2 in bench_runtime(ExperimentConfig(), [64, 256, 1024]):
    print(f"L = {L:5d}   MM {a1:8.1f} ms/sweep   descent-ascent {a2:8.1f} ms/sweep")
