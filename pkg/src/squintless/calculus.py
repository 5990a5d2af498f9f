"""Analytic derivatives of the squared gain w.r.t. one antenna and frequency.

With the other antennas fixed, the squared gain seen from antenna ``m`` is

    h(t_m) = 2|C| cos(F a(t_m) - angle C) + |C|^2 + 1,

where ``C`` sums the other antennas' phasors. Everything here is a closed
form of that expression: gradient, Hessian, a global (position-independent)
lower bound on the Hessian over the aperture, the concave quadratic
minorizer built from it, and the frequency derivative used by the
descent-ascent solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    FrequencyGrid,
    UserGeometry,
    excess_distance,
    gain_sq_closed_form,
    others_sum,
)


@dataclass(frozen=True)
class GradientHessianAt:
    grad: np.ndarray
    hess: np.ndarray
    c_mag: float
    c_phase: float


@dataclass(frozen=True)
class CurvatureBound:
    """Constant matrix ``M`` with ``M <= Hessian`` over the whole aperture."""

    m_matrix: np.ndarray
    h1_lb: float
    h3_lb: float
    h2_ub: float
    c1_range: tuple[float, float]
    c2_range: tuple[float, float]


def path_gradient(geom: UserGeometry, t) -> np.ndarray:
    """Gradient of the Fresnel distance w.r.t. ``(y, z)``; shape ``(..., 2)``."""
    t = np.asarray(t, dtype=float)
    y, z = t[..., 0], t[..., 1]
    w0, u0, r0 = geom.w0, geom.u0, geom.r0
    proj = y * w0 + z * u0
    return np.stack([(y - proj * w0) / r0 - w0, (z - proj * u0) / r0 - u0], axis=-1)


def path_hessian(geom: UserGeometry) -> np.ndarray:
    """Constant Hessian of the Fresnel distance."""
    w0, u0, r0 = geom.w0, geom.u0, geom.r0
    return np.array([[1 - w0 * w0, -w0 * u0], [-w0 * u0, 1 - u0 * u0]]) / r0


def _resolve_offset(grid: FrequencyGrid, l, f):
    if (l is None) == (f is None):
        raise TypeError("pass exactly one of l (subcarrier index) or f (Hz)")
    if l is not None:
        return float(grid.offsets[l])
    return float(grid.wavenumber_offset(f))


def _split(positions, geom, F, m):
    c = complex(others_sum(positions, geom, F, m))
    mag = abs(c)
    phase = math.atan2(c.imag, c.real) if mag > 0 else 0.0
    t_m = np.asarray(positions, dtype=float)[m]
    return c, mag, phase, t_m


def grad_h(positions, geom: UserGeometry, grid: FrequencyGrid, m: int, l=None, *, f=None) -> np.ndarray:
    """Gradient of the squared gain w.r.t. antenna ``m``'s position.

    The frequency is either subcarrier ``l`` or an arbitrary ``f`` in Hz.
    """
    F = _resolve_offset(grid, l, f)
    _, mag, phase, t_m = _split(positions, geom, F, m)
    if mag == 0.0 or F == 0.0:
        return np.zeros(2)
    s = math.sin(F * float(excess_distance(geom, t_m)) - phase)
    return -2.0 * mag * F * s * path_gradient(geom, t_m)


def hessian_from_phase(geom: UserGeometry, t, F, c_mag, c_phase) -> np.ndarray:
    """Hessian of ``h`` for given ``|C|``, ``angle C``; broadcasts over ``t``.

    Returns shape ``t.shape[:-1] + (2, 2)``, exactly symmetric.
    """
    t = np.asarray(t, dtype=float)
    theta = F * excess_distance(geom, t) - c_phase
    k = 2.0 * c_mag * F
    s = (k * np.sin(theta))[..., None, None]
    c = (k * F * np.cos(theta))[..., None, None]
    g = path_gradient(geom, t)
    outer = g[..., :, None] * g[..., None, :]
    hess = -s * path_hessian(geom) - c * outer
    # Exact symmetry; the two off-diagonal products can differ in the last ulp.
    off = hess[..., 0, 1]
    hess[..., 1, 0] = off
    return hess


def hess_h(positions, geom: UserGeometry, grid: FrequencyGrid, m: int, l=None, *, f=None) -> np.ndarray:
    """2x2 Hessian of the squared gain w.r.t. antenna ``m``'s position."""
    F = _resolve_offset(grid, l, f)
    _, mag, phase, t_m = _split(positions, geom, F, m)
    if mag == 0.0:
        return np.zeros((2, 2))
    return hessian_from_phase(geom, t_m, F, mag, phase)


def gradient_hessian(positions, geom, grid, m, l) -> GradientHessianAt:
    F = _resolve_offset(grid, l, None)
    _, mag, phase, _ = _split(positions, geom, F, m)
    return GradientHessianAt(
        grad=grad_h(positions, geom, grid, m, l),
        hess=hess_h(positions, geom, grid, m, l),
        c_mag=mag,
        c_phase=phase,
    )


def derivative_ranges(geom: UserGeometry, half_width: float):
    """Intervals containing ``da/dy`` and ``da/dz`` anywhere in the aperture."""
    w0, u0, r0 = geom.w0, geom.u0, geom.r0
    cross = abs(w0 * u0)
    ry = half_width * (1 - w0 * w0 + cross) / r0
    rz = half_width * (1 - u0 * u0 + cross) / r0
    return (-ry - w0, ry - w0), (-rz - u0, rz - u0)


def curvature_bound_diag(geom: UserGeometry, half_width: float, F, c_mag):
    """Vectorized diagonal of the curvature bound for arrays ``F``, ``c_mag``.

    Returns ``(d_y, d_z, h1_lb, h3_lb, h2_ub)``; the bound matrix is
    ``diag(d_y, d_z)`` since the off-diagonal part is bounded isotropically.
    """
    F = np.asarray(F, dtype=float)
    k = 2.0 * np.asarray(c_mag, dtype=float)
    w0, u0, r0 = geom.w0, geom.u0, geom.r0
    (c1l, c1u), (c2l, c2u) = derivative_ranges(geom, half_width)
    env_y = max(abs(c1l), abs(c1u))
    env_z = max(abs(c2l), abs(c2u))
    h1_lb = -np.abs(k * F * (1 - w0 * w0) / r0) - k * F * F * env_y ** 2
    h3_lb = -np.abs(k * F * (1 - u0 * u0) / r0) - k * F * F * env_z ** 2
    prods = (c1l * c2l, c1l * c2u, c1u * c2l, c1u * c2u)
    cross_env = max(abs(min(prods)), abs(max(prods)))
    h2_ub = np.abs(k * F * w0 * u0 / r0) + k * F * F * cross_env
    return h1_lb - h2_ub, h3_lb - h2_ub, h1_lb, h3_lb, h2_ub


def hessian_lower_bound(geom: UserGeometry, config: ArrayConfig, grid: FrequencyGrid, c_mag: float, l: int) -> CurvatureBound:
    """Loewner lower bound ``M_{m,l}`` on the Hessian for ``|C| = c_mag``.

    Depends only on geometry, aperture, frequency and ``|C|``, never on the
    antenna's own position.
    """
    if c_mag < 0:
        raise ValueError("c_mag must be nonnegative")
    F = grid.offsets[l]
    d_y, d_z, h1, h3, h2 = curvature_bound_diag(geom, config.half_width, F, c_mag)
    c1, c2 = derivative_ranges(geom, config.half_width)
    return CurvatureBound(
        m_matrix=np.diag([float(d_y), float(d_z)]),
        h1_lb=float(h1),
        h3_lb=float(h3),
        h2_ub=float(h2),
        c1_range=c1,
        c2_range=c2,
    )


def surrogate_h(positions_ref, geom, config: ArrayConfig, grid, m: int, l: int, t) -> float:
    """Concave quadratic minorizer of ``h`` expanded at antenna ``m``'s current position."""
    t_ref = np.asarray(positions_ref, dtype=float)[m]
    F = grid.offsets[l]
    _, mag, _, _ = _split(positions_ref, geom, F, m)
    bound = hessian_lower_bound(geom, config, grid, mag, l)
    d = np.asarray(t, dtype=float) - t_ref
    return float(
        gain_sq_closed_form(positions_ref, geom, grid, m, l)
        + grad_h(positions_ref, geom, grid, m, l) @ d
        + 0.5 * d @ bound.m_matrix @ d
    )


def spacing_linearization(t_ref, t_s, t) -> float:
    """First-order lower bound of ``||t - t_s||`` around ``t_ref``."""
    t_ref, t_s, t = (np.asarray(v, dtype=float) for v in (t_ref, t_s, t))
    diff = t_ref - t_s
    norm = math.hypot(diff[0], diff[1])
    if norm == 0.0:
        raise ValueError("expansion point coincides with the other antenna")
    return float(diff @ (t - t_s) / norm)


def grad_k_wrt_f(positions, geom: UserGeometry, grid: FrequencyGrid, f: float) -> float:
    """Derivative of the squared gain w.r.t. frequency, ``2 Re{w^H b' b^H w}``.

    The smoothing term of the descent-ascent objective does not depend on
    ``f`` and contributes nothing.
    """
    d = excess_distance(geom, positions)
    k = 2.0 * np.pi / SPEED_OF_LIGHT
    w = np.exp(-1j * k * grid.f_center * d)
    b = np.exp(-1j * k * f * d)
    db = -1j * k * d * b
    return float(2.0 * (np.vdot(w, db) * np.vdot(b, w)).real)
