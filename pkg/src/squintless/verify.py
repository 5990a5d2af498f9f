"""Numerical audits of the closed-form calculus.

Each audit draws seeded random feasible layouts and compares an analytic
quantity with an independent route: central finite differences, direct
evaluation from steering vectors, or sampling. Relative errors use the
larger of the reference magnitude and a floor of ``1e-3`` times the
quantity's natural scale, so that points where the true derivative happens
to vanish do not turn roundoff into a spurious relative error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import (
    curvature_bound_diag,
    grad_h,
    grad_k_wrt_f,
    hess_h,
    hessian_from_phase,
    path_gradient,
)
from .channel import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    FrequencyGrid,
    UserGeometry,
    excess_distance,
    gain_sq,
    gain_sq_closed_form,
    is_feasible,
    others_sum,
    random_layout,
    steering_vector,
)
from .baselines import fpa_layout

GRAD_TOL = 1e-5
HESS_TOL = 1e-4
FREQ_TOL = 1e-5
LOEWNER_TOL = -1e-8
MINORIZE_TOL = 1e-9
CLOSED_FORM_TOL = 1e-9


@dataclass(frozen=True)
class AuditResult:
    name: str
    worst: float
    tol: float
    passed: bool
    samples: int

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst={self.worst:.3e} tol={self.tol:.1e} n={self.samples}"


def _layouts(config: ArrayConfig, rng, n):
    """Alternate full-aperture random layouts with jittered uniform grids."""
    try:
        base = fpa_layout(config, allow_rectangular=True)
    except ValueError:
        base = None
    for k in range(n):
        p = None
        if k % 2 == 1 and base is not None:
            # grid stretched to 1.5 d_min so a +-0.15 d_min jitter stays feasible
            p = base * 1.5 + rng.uniform(-0.15, 0.15, base.shape) * config.d_min
            if not is_feasible(p, config):
                p = None
        yield random_layout(config, rng) if p is None else p


def _fd_grad(fun, x, step):
    g = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


def _with(positions, m, t):
    q = np.array(positions, dtype=float)
    q[m] = t
    return q


def _grad_scale(geom, config, grid, c_mag):
    env = np.abs(path_gradient(geom, np.full(2, config.half_width))).max() + abs(geom.w0) + abs(geom.u0)
    return 2.0 * max(c_mag, 1.0) * np.abs(grid.offsets).max() * env


def audit_gradient(geom, config, grid, trials, rng):
    """Analytic gradient and Hessian vs central differences (step ``1e-7 A``)."""
    step = 1e-7 * config.aperture
    worst_g = worst_h = 0.0
    if config.m_count == 1:
        p = np.zeros((1, 2))
        for l in range(0, grid.l_count + 1, max(1, grid.l_count // 4)):
            worst_g = max(worst_g, float(np.abs(grad_h(p, geom, grid, 0, l)).max()))
        return (AuditResult("gradient", worst_g, GRAD_TOL, worst_g <= GRAD_TOL, trials),
                AuditResult("hessian", 0.0, HESS_TOL, True, trials))
    for p in _layouts(config, rng, trials):
        m = int(rng.integers(config.m_count))
        l = int(rng.integers(grid.l_count + 1))
        t = p[m]
        g = grad_h(p, geom, grid, m, l)
        fd = _fd_grad(lambda x: gain_sq_closed_form(_with(p, m, x), geom, grid, m, l), t, step)
        c_mag = abs(complex(others_sum(p, geom, grid.offsets[l], m)))
        floor = 1e-3 * _grad_scale(geom, config, grid, c_mag)
        worst_g = max(worst_g, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), floor))

        H = hess_h(p, geom, grid, m, l)
        fdH = np.column_stack([
            (grad_h(_with(p, m, t + e), geom, grid, m, l) - grad_h(_with(p, m, t - e), geom, grid, m, l)) / (2 * step)
            for e in np.eye(2) * step
        ])
        hfloor = floor * np.abs(grid.offsets).max()
        worst_h = max(worst_h, np.linalg.norm(H - fdH) / max(np.linalg.norm(fdH), hfloor))
    return (AuditResult("gradient", worst_g, GRAD_TOL, worst_g <= GRAD_TOL, trials),
            AuditResult("hessian", worst_h, HESS_TOL, worst_h <= HESS_TOL, trials))


def audit_frequency_gradient(geom, config, grid, trials, rng, step=1e3):
    """Frequency derivative vs central differences of the squared gain (1 kHz)."""
    worst = 0.0
    for p in _layouts(config, rng, trials):
        f = float(rng.uniform(grid.f_lo + step, grid.f_hi - step))
        g = grad_k_wrt_f(p, geom, grid, f)
        fd = (float(gain_sq(p, geom, grid, f + step)) - float(gain_sq(p, geom, grid, f - step))) / (2 * step)
        d = excess_distance(geom, p)
        scale = 2.0 * config.m_count ** 2 * (2 * np.pi / SPEED_OF_LIGHT) * np.abs(d - d.mean()).max()
        denom = max(abs(fd), 1e-3 * scale)
        # a single antenna has a constant gain: compare absolutely
        worst = max(worst, abs(g - fd) / denom if denom > 0 else abs(g - fd))
    return AuditResult("frequency_gradient", worst, FREQ_TOL, worst <= FREQ_TOL, trials)


def loewner_margin(geom, config, grid, c_mag, c_phase, l, points):
    """Smallest eigenvalue of ``Hessian - bound`` over the sampled ``points``."""
    F = grid.offsets[l]
    H = hessian_from_phase(geom, points, F, c_mag, c_phase)
    d_y, d_z, *_ = curvature_bound_diag(geom, config.half_width, F, c_mag)
    H[:, 0, 0] -= d_y
    H[:, 1, 1] -= d_z
    return float(np.linalg.eigvalsh(H)[:, 0].min())


def audit_loewner(geom, config, grid, points, pairs, rng):
    """Curvature bound below the Hessian at ``points`` positions per (m, l) pair.

    Half of the pairs use the layout's actual ``|C|``; the rest use the
    extreme ``|C| = M - 1`` with a random phase.
    """
    hw = config.half_width
    per = max(1, points // pairs)
    worst = np.inf
    for k in range(pairs):
        l = int(rng.integers(grid.l_count + 1))
        if k % 2 == 0 and config.m_count > 1:
            p = random_layout(config, rng)
            m = int(rng.integers(config.m_count))
            c = complex(others_sum(p, geom, grid.offsets[l], m))
            mag, ph = abs(c), float(np.angle(c))
        else:
            mag, ph = float(config.m_count - 1), float(rng.uniform(-np.pi, np.pi))
        pts = rng.uniform(-hw, hw, (per, 2))
        worst = min(worst, loewner_margin(geom, config, grid, mag, ph, l, pts))
    return AuditResult("loewner_bound", worst, LOEWNER_TOL, worst >= LOEWNER_TOL, per * pairs)


def audit_minorization(geom, config, grid, trials, rng, per_layout=100):
    """Quadratic surrogate never exceeds the squared gain; tight at the expansion point."""
    from .alg_sv import antenna_surrogates

    hw = config.half_width
    worst_gap = -np.inf
    worst_tight = 0.0
    n = 0
    n_layouts = max(1, trials // per_layout)
    for p in _layouts(config, rng, n_layouts):
        m = int(rng.integers(config.m_count))
        sur = antenna_surrogates(p, m, geom, config, grid)
        ts = rng.uniform(-hw, hw, (per_layout, 2))
        ls = rng.integers(grid.l_count + 1, size=per_layout)
        for t, l in zip(ts, ls):
            d = t - sur.center
            q = sur.values[l] + sur.grads[l] @ d + 0.5 * d @ sur.curvatures[l] @ d
            h = gain_sq_closed_form(_with(p, m, t), geom, grid, m, int(l))
            worst_gap = max(worst_gap, q - h)
            n += 1
        for l in ls[:5]:
            l = int(l)
            h0 = gain_sq_closed_form(p, geom, grid, m, l)
            worst_tight = max(worst_tight, abs(sur.values[l] - h0),
                              float(np.abs(sur.grads[l] - grad_h(p, geom, grid, m, l)).max()))
    ok = worst_gap <= MINORIZE_TOL and worst_tight <= MINORIZE_TOL
    return AuditResult("minorization", max(worst_gap, worst_tight), MINORIZE_TOL, ok, n)


def audit_closed_form(geom, config, grid, trials, rng):
    """Closed-form squared gain vs ``|w^H b|^2`` from steering vectors, all m."""
    worst = 0.0
    n = 0
    for p in _layouts(config, rng, trials):
        l = int(rng.integers(grid.l_count + 1))
        f = grid.freqs[l]
        w = steering_vector(p, geom, grid.f_center)
        b = steering_vector(p, geom, f)
        ref = abs(np.vdot(w, b)) ** 2
        vals = np.array([gain_sq_closed_form(p, geom, grid, m, l) for m in range(config.m_count)])
        worst = max(worst, float(np.abs(vals - ref).max()) / max(ref, 1e-300),
                    float(np.ptp(vals)) / max(ref, 1e-300))
        n += 1
    return AuditResult("closed_form", worst, CLOSED_FORM_TOL, worst <= CLOSED_FORM_TOL, n)


def run_all(geom: UserGeometry, config: ArrayConfig, grid: FrequencyGrid,
            trials: int = 100, seed: int = 0) -> list[AuditResult]:
    """Every audit, scaled from ``trials``.

    Derivative checks use ``trials`` layouts, the curvature bound
    ``1000 * trials`` points over at least 10 (m, l) pairs, minorization
    ``100 * trials`` pairs and the closed form ``10 * trials`` triples.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    g, h = audit_gradient(geom, config, grid, trials, rng)
    return [
        g,
        h,
        audit_frequency_gradient(geom, config, grid, trials, rng),
        audit_loewner(geom, config, grid, 1000 * trials, max(10, trials // 10), rng),
        audit_minorization(geom, config, grid, 100 * trials, rng),
        audit_closed_form(geom, config, grid, 10 * trials, rng),
    ]
