"""Slack-variable MM / block-coordinate solver for the max-min gain problem.

Each sweep visits the antennas in order. For antenna ``m`` every subcarrier's
squared gain is replaced by its concave quadratic minorizer, the spacing
constraints by their half-plane linearizations, and the resulting convex
max-min problem is solved exactly. Because each minorizer is tight at the
current position and the returned point never scores below it, the true
objective cannot decrease.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .calculus import curvature_bound_diag, path_gradient
from .channel import (
    ArrayConfig,
    FrequencyGrid,
    InfeasibleLayout,
    UserGeometry,
    excess_distance,
    gain_sq_grid,
    layout_violations,
)
from .subsolvers import SurrogateSet, solve_p4, spacing_cell


class InfeasibleInit(InfeasibleLayout):
    """The initial layout violates the box or spacing constraint."""


@dataclass(frozen=True)
class StoppingRule:
    """Stop once a full sweep improves the objective by less than ``rel_tol``
    (relative), or after ``max_iters`` sweeps."""

    rel_tol: float = 1e-6
    max_iters: int = 200

    def improved_little(self, prev: float, cur: float) -> bool:
        return (cur - prev) < self.rel_tol * max(abs(prev), np.finfo(float).tiny)

    def done(self, prev: float, cur: float, n: int) -> bool:
        return n >= self.max_iters or self.improved_little(prev, cur)


@dataclass
class RunState:
    """Layout and per-sweep trace of an optimization run.

    ``objective_trace[0]`` is the initial objective; entry ``n`` follows
    sweep ``n``. ``kappa_trace[n-1]`` holds the per-antenna subproblem values
    of sweep ``n`` (empty for solvers without one). ``layouts`` keeps the
    layout after every sweep, starting with the initial one.
    """

    positions: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    kappa_trace: list[list[float]] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)
    layouts: list[np.ndarray] = field(default_factory=list)
    iteration: int = 0
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    def records(self):
        """Trace rows ``(iteration, min_gain_sq, min_gain, wall_ms)``."""
        for n, (obj, ms) in enumerate(zip(self.objective_trace, self.wall_ms)):
            yield n, obj, float(np.sqrt(obj)), ms


def check_init(init, config: ArrayConfig) -> np.ndarray:
    p = np.array(init, dtype=float)
    problems = layout_violations(p, config)
    if problems:
        raise InfeasibleInit("; ".join(problems))
    return p


def antenna_surrogates(positions, m: int, geom: UserGeometry, config: ArrayConfig,
                       grid: FrequencyGrid) -> SurrogateSet:
    """Minorizers of every subcarrier's squared gain around antenna ``m``."""
    p = np.asarray(positions, dtype=float)
    F = grid.offsets
    d = excess_distance(geom, p)
    d_m = d[m]
    c = np.exp(1j * np.multiply.outer(F, np.delete(d, m))).sum(axis=1)
    mag = np.abs(c)
    theta = F * d_m - np.angle(c)
    values = 2.0 * mag * np.cos(theta) + mag * mag + 1.0
    grads = (-2.0 * mag * F * np.sin(theta))[:, None] * path_gradient(geom, p[m])
    d_y, d_z, *_ = curvature_bound_diag(geom, config.half_width, F, mag)
    curv = np.zeros((len(F), 2, 2))
    curv[:, 0, 0] = d_y
    curv[:, 1, 1] = d_z
    return SurrogateSet(p[m].copy(), values, grads, curv)


def sv_sweep(positions: np.ndarray, geom, config, grid, backend="conic") -> list[float]:
    """One in-place pass over all antennas; returns the subproblem values."""
    kappas = []
    for m in range(config.m_count):
        if config.m_count == 1:
            kappas.append(1.0)
            continue
        sur = antenna_surrogates(positions, m, geom, config, grid)
        sol = solve_p4(spacing_cell(positions, m, config), sur, backend=backend)
        positions[m] = sol.t_opt
        kappas.append(sol.kappa)
    return kappas


def run_alg1(init, geom: UserGeometry, config: ArrayConfig, grid: FrequencyGrid,
             stop: StoppingRule = StoppingRule(), backend: str = "conic",
             callback=None) -> RunState:
    """Run the MM/BCD solver from a feasible ``init`` layout.

    ``backend`` selects the subproblem solver (see
    :func:`~squintless.subsolvers.solve_p4`). ``callback(state)`` is invoked
    after every sweep if given.
    """
    p = check_init(init, config)
    state = RunState(p.copy())
    state.objective_trace.append(float(gain_sq_grid(p, geom, grid).min()))
    state.wall_ms.append(0.0)
    state.layouts.append(p.copy())
    while True:
        t0 = time.perf_counter()
        kappas = sv_sweep(p, geom, config, grid, backend)
        ms = 1e3 * (time.perf_counter() - t0)
        obj = float(gain_sq_grid(p, geom, grid).min())
        prev = state.objective_trace[-1]
        state.iteration += 1
        state.objective_trace.append(obj)
        state.kappa_trace.append(kappas)
        state.wall_ms.append(ms)
        state.layouts.append(p.copy())
        state.positions = p.copy()
        if callback is not None:
            callback(state)
        if stop.done(prev, obj, state.iteration):
            state.converged = stop.improved_little(prev, obj)
            return state
