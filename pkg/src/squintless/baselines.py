"""Comparators: the fixed uniform grid and a penalized particle swarm."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import (
    ArrayConfig,
    FrequencyGrid,
    UserGeometry,
    gain_sq,
    layout_violations,
)


class NonSquareM(ValueError):
    pass


class NoFeasibleParticle(RuntimeError):
    """No feasible swarm position was ever visited.

    ``best_penalized`` holds the best penalized layout for diagnosis.
    """

    def __init__(self, msg, best_penalized=None):
        super().__init__(msg)
        self.best_penalized = best_penalized


def fpa_layout(config: ArrayConfig, allow_rectangular: bool = False) -> np.ndarray:
    """Centered uniform grid with spacing ``d_min``.

    Square antenna counts give a ``sqrt(M) x sqrt(M)`` grid. Other counts
    raise :class:`NonSquareM` unless ``allow_rectangular`` is set, in which
    case the first ``M`` points of the smallest enclosing square grid, in
    row-major order, are taken and re-centered.
    """
    m = config.m_count
    side = math.isqrt(m)
    if side * side != m:
        if not allow_rectangular:
            raise NonSquareM(f"m_count={m} is not a perfect square")
        side = math.ceil(math.sqrt(m))
    idx = np.arange(side) - 0.5 * (side - 1)
    yy, zz = np.meshgrid(idx, idx, indexing="ij")
    pts = config.d_min * np.stack([yy.ravel(), zz.ravel()], axis=1)[:m]
    if side * side != m:
        pts -= 0.5 * (pts.max(axis=0) + pts.min(axis=0))
    return pts


@dataclass(frozen=True)
class PsoParams:
    swarm_size: int = 50
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    max_iters: int = 500
    penalty_weight: float = 1e6
    seed: int = 0
    init: str = "random"

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if min(self.inertia, self.cognitive, self.social) < 0:
            raise ValueError("PSO weights must be nonnegative")
        if not self.penalty_weight > 0:
            raise ValueError("penalty_weight must be positive")
        if self.init not in ("random", "fpa"):
            raise ValueError(f"unknown PSO init {self.init!r}")


@dataclass
class PsoResult:
    positions: np.ndarray
    objective: float
    best_trace: list[float]
    objective_trace: list[float]
    wall_ms: list[float]


def _swarm_objective(X, geom, grid):
    """min_l g^2 for a batch of layouts ``X`` of shape ``(P, M, 2)``."""
    return gain_sq(X, geom, grid, grid.freqs).min(axis=0)


def _spacing_shortfall(X, d_min):
    diff = X[:, :, None, :] - X[:, None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    iu = np.triu_indices(X.shape[1], k=1)
    short = np.maximum(0.0, d_min - dist[:, iu[0], iu[1]])
    return (short ** 2).sum(axis=1), short.max(axis=1, initial=0.0)


def run_pso(geom: UserGeometry, config: ArrayConfig, grid: FrequencyGrid,
            params: PsoParams = PsoParams()) -> PsoResult:
    """Global-best PSO on the flattened ``2M`` coordinates.

    Particles are clamped to the aperture; spacing violations are penalized
    quadratically. Only feasible particles can become the reported best, so
    the result always passes the layout audit.
    """
    rng = np.random.default_rng(params.seed)
    hw = config.half_width
    M, P = config.m_count, params.swarm_size
    vmax = 0.2 * config.aperture

    if params.init == "fpa":
        X = np.broadcast_to(fpa_layout(config, allow_rectangular=True), (P, M, 2)).copy()
        V = rng.uniform(-1, 1, (P, M, 2)) * config.d_min
    else:
        X = rng.uniform(-hw, hw, (P, M, 2))
        V = rng.uniform(-1, 1, (P, M, 2)) * 0.1 * vmax

    tol = config.eps_feas

    def evaluate(X):
        obj = _swarm_objective(X, geom, grid)
        pen, worst = _spacing_shortfall(X, config.d_min)
        return obj - params.penalty_weight * pen, obj, worst <= tol

    fit, obj, feas = evaluate(X)
    pbest, pbest_fit = X.copy(), fit.copy()
    g = int(np.argmax(pbest_fit))
    best_feas, best_feas_obj = None, -np.inf
    if feas.any():
        k = int(np.argmax(np.where(feas, obj, -np.inf)))
        best_feas, best_feas_obj = X[k].copy(), float(obj[k])

    best_trace = [float(pbest_fit[g])]
    obj_trace = [best_feas_obj]
    wall = [0.0]

    for _ in range(params.max_iters):
        t0 = time.perf_counter()
        r1 = rng.random((P, M, 2))
        r2 = rng.random((P, M, 2))
        V = (params.inertia * V
             + params.cognitive * r1 * (pbest - X)
             + params.social * r2 * (pbest[g] - X))
        V = np.clip(V, -vmax, vmax)
        X = np.clip(X + V, -hw, hw)
        fit, obj, feas = evaluate(X)
        better = fit > pbest_fit
        pbest[better] = X[better]
        pbest_fit[better] = fit[better]
        g = int(np.argmax(pbest_fit))
        if feas.any():
            k = int(np.argmax(np.where(feas, obj, -np.inf)))
            if obj[k] > best_feas_obj:
                best_feas, best_feas_obj = X[k].copy(), float(obj[k])
        best_trace.append(float(pbest_fit[g]))
        obj_trace.append(best_feas_obj)
        wall.append(1e3 * (time.perf_counter() - t0))

    if best_feas is None:
        raise NoFeasibleParticle("PSO never visited a feasible layout", pbest[g].copy())
    problems = layout_violations(best_feas, config)
    if problems:
        raise NoFeasibleParticle("PSO best layout failed the audit: " + "; ".join(problems), best_feas)
    return PsoResult(best_feas, best_feas_obj, best_trace, obj_trace, wall)
