"""Smoothed gradient descent-ascent over (antenna position, frequency).

Frequency is relaxed to the continuous band and plays the minimizing
adversary. For each antenna the inner loop alternates an ascent step on the
position (projected onto the linearized spacing cell when it leaves it), a
descent step on the frequency (clamped to the band) and an averaging step on
the smoothing anchor. The outer loop is the same block-coordinate sweep as
the MM solver and reports the objective on the discrete subcarrier grid.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .alg_sv import RunState, StoppingRule, check_init
from .channel import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    FrequencyGrid,
    UserGeometry,
    excess_distance,
    gain_sq,
    gain_sq_grid,
)
from .subsolvers import project_p6, spacing_cell

TWO_PI_OVER_C = 2.0 * math.pi / SPEED_OF_LIGHT


@dataclass(frozen=True)
class InnerStop:
    """Stop when the position moves less than ``step_tol`` (meters) for
    ``patience`` consecutive iterations, or after ``max_iters``."""

    step_tol: float | None = None
    patience: int = 10
    max_iters: int = 2000


@dataclass(frozen=True)
class SgdaParams:
    """Descent-ascent constants.

    ``eta_t`` (m per unit gradient) and ``eta_f`` (Hz per unit gradient)
    default to ``None``, meaning they are derived from the problem by
    :func:`default_steps`. ``inner_stop.step_tol`` defaults to ``1e-6 * A``.
    """

    p_s: float = 2.0
    eta_t: float | None = None
    eta_f: float | None = None
    eta_alpha: float = 0.5
    inner_stop: InnerStop = InnerStop()
    seed: int = 0

    def __post_init__(self):
        if not self.p_s > 0:
            raise ValueError("p_s must be positive")
        if not 0 < self.eta_alpha <= 1:
            raise ValueError("eta_alpha must lie in (0, 1]")
        for name in ("eta_t", "eta_f"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")


def default_steps(positions, geom: UserGeometry, config: ArrayConfig, grid: FrequencyGrid):
    """Constant step sizes ``(eta_t, eta_f)`` scaled to the problem.

    Position: ``1e-2 * A / M^2``. Frequency: the reciprocal of the squared
    gain's curvature in ``f`` at the center tone for ``positions``,
    ``2 (2 pi / c)^2 (M sum d^2 - (sum d)^2)`` with ``d`` the path offsets,
    so one step moves ``f`` by about its distance from the center tone.
    """
    M = config.m_count
    eta_t = 1e-2 * config.aperture / M ** 2
    d = excess_distance(geom, positions)
    spread = M * float(np.sum(d * d)) - float(np.sum(d)) ** 2
    lip_f = 2.0 * TWO_PI_OVER_C ** 2 * spread
    eta_f = 1.0 / lip_f if lip_f > 0 else grid.f_hi - grid.f_lo
    return eta_t, eta_f


def smoothed_objective(t, alpha, positions, geom: UserGeometry, grid: FrequencyGrid,
                       f: float, p_s: float, m: int) -> float:
    """``h(t, f) + (p_s / 2) ||t - alpha||^2`` with antenna ``m`` moved to ``t``."""
    p = np.array(positions, dtype=float)
    p[m] = t
    diff = np.asarray(t, dtype=float) - np.asarray(alpha, dtype=float)
    return float(gain_sq(p, geom, grid, f)) + 0.5 * p_s * float(diff @ diff)


@dataclass
class InnerResult:
    t: np.ndarray
    f: float
    iterations: int
    converged: bool
    t_path: np.ndarray
    f_path: np.ndarray
    alpha_path: np.ndarray


def sgda_inner(m: int, positions, geom: UserGeometry, config: ArrayConfig,
               grid: FrequencyGrid, params: SgdaParams, rng: np.random.Generator,
               eta_t: float, eta_f: float, record: bool = False) -> InnerResult:
    """Descent-ascent loop for antenna ``m`` with the others fixed.

    With ``record`` the full ``t``, ``f`` and anchor paths are returned
    (initial point first).
    """
    p = np.asarray(positions, dtype=float)
    cell = spacing_cell(p, m, config) if config.m_count > 1 else None
    d_oth = excess_distance(geom, np.delete(p, m, axis=0))
    t = p[m].copy()
    alpha = t.copy()
    f = float(rng.uniform(grid.f_lo, grid.f_hi))
    stop = params.inner_stop
    step_tol = stop.step_tol if stop.step_tol is not None else 1e-6 * config.aperture
    fc = grid.f_center
    r0 = geom.r0
    w0, u0 = geom.w0, geom.u0
    G, hvec = cell.inequalities() if cell is not None else (None, None)
    tol = config.eps_feas

    ts, fs, als = ([t.copy()], [f], [alpha.copy()]) if record else (None, None, None)
    calm = 0
    i = 0
    converged = False
    while i < stop.max_iters:
        F = TWO_PI_OVER_C * (fc - f)
        y, z = t
        proj = y * w0 + z * u0
        d_t = -proj + (y * y + z * z - proj * proj) / (2.0 * r0)
        if d_oth.size:
            e = np.exp(1j * F * d_oth)
            C = complex(e.sum())
            # d/dt of 2 Re(conj(C) exp(j F d_t))
            dh = -2.0 * F * (C.conjugate() * complex(math.cos(F * d_t), math.sin(F * d_t))).imag
            a_y = (y - proj * w0) / r0 - w0
            a_z = (z - proj * u0) / r0 - u0
            g_y = dh * a_y + params.p_s * (y - alpha[0])
            g_z = dh * a_z + params.p_s * (z - alpha[1])
        else:
            g_y = params.p_s * (y - alpha[0])
            g_z = params.p_s * (z - alpha[1])
        t_new = np.array([y + eta_t * g_y, z + eta_t * g_z])
        if G is not None and (G @ t_new - hvec).max() > tol:
            t_new = project_p6(cell, t_new)

        # frequency gradient at the updated position
        yn, zn = t_new
        proj = yn * w0 + zn * u0
        d_new = -proj + (yn * yn + zn * zn - proj * proj) / (2.0 * r0)
        if d_oth.size:
            ph_new = complex(math.cos(F * d_new), math.sin(F * d_new))
            S = C + ph_new
            D = complex((d_oth * e).sum()) + d_new * ph_new
            g_f = 2.0 * TWO_PI_OVER_C * (D * S.conjugate()).imag
        else:
            g_f = 0.0
        f = min(max(f - eta_f * g_f, grid.f_lo), grid.f_hi)
        alpha = alpha + params.eta_alpha * (t_new - alpha)

        moved = math.hypot(t_new[0] - y, t_new[1] - z)
        t = t_new
        i += 1
        if record:
            ts.append(t.copy())
            fs.append(f)
            als.append(alpha.copy())
        calm = calm + 1 if moved < step_tol else 0
        if calm >= stop.patience:
            converged = True
            break

    if record:
        return InnerResult(t, f, i, converged, np.array(ts), np.array(fs), np.array(als))
    return InnerResult(t, f, i, converged, None, None, None)


@dataclass
class SgdaRunState(RunState):
    """Run trace plus per-antenna objective before/after each inner loop."""

    call_before: list[float] = None
    call_after: list[float] = None
    inner_iters: list[int] = None
    eta_t: float = 0.0
    eta_f: float = 0.0


def run_alg2(init, geom: UserGeometry, config: ArrayConfig, grid: FrequencyGrid,
             params: SgdaParams = SgdaParams(), stop: StoppingRule = StoppingRule(),
             callback=None) -> SgdaRunState:
    """Block-coordinate descent-ascent from a feasible ``init`` layout."""
    p = check_init(init, config)
    rng = np.random.default_rng(params.seed)
    auto_t, auto_f = default_steps(p, geom, config, grid)
    eta_t = params.eta_t if params.eta_t is not None else auto_t
    eta_f = params.eta_f if params.eta_f is not None else auto_f

    state = SgdaRunState(p.copy(), call_before=[], call_after=[], inner_iters=[],
                         eta_t=eta_t, eta_f=eta_f)
    state.objective_trace.append(float(gain_sq_grid(p, geom, grid).min()))
    state.wall_ms.append(0.0)
    state.layouts.append(p.copy())
    while True:
        t0 = time.perf_counter()
        cur = state.objective_trace[-1]
        for m in range(config.m_count):
            res = sgda_inner(m, p, geom, config, grid, params, rng, eta_t, eta_f)
            p[m] = res.t
            state.inner_iters.append(res.iterations)
            state.call_before.append(cur)
            cur = float(gain_sq_grid(p, geom, grid).min())
            state.call_after.append(cur)
        ms = 1e3 * (time.perf_counter() - t0)
        obj = float(gain_sq_grid(p, geom, grid).min())
        prev = state.objective_trace[-1]
        state.iteration += 1
        state.objective_trace.append(obj)
        state.kappa_trace.append([])
        state.wall_ms.append(ms)
        state.layouts.append(p.copy())
        state.positions = p.copy()
        if callback is not None:
            callback(state)
        if stop.done(prev, obj, state.iteration):
            state.converged = stop.improved_little(prev, obj)
            return state
