"""Audit the closed-form derivatives and the curvature bound.

Every formula the optimizers rely on is compared with an independent
route: central differences for gradients and Hessians, sampling for the
Loewner bound and the minorizer, and direct steering-vector sums for the
closed-form gain.
"""

from squintless.config import ExperimentConfig
from squintless.verify import run_all

cfg = ExperimentConfig()
for r in run_all(cfg.geometry(), cfg.array(), cfg.grid(), trials=20, seed=0):
    print(r.line())
