"""Near-field wideband channel model for a planar movable-antenna array.

Antenna positions are ``(M, 2)`` arrays of ``(y, z)`` coordinates in meters on
the array plane. The user sits at distance ``r0`` in direction
``(theta0, phi0)``; every antenna-to-user distance uses the second-order
(Fresnel) expansion so that the closed-form derivatives in
:mod:`squintless.calculus` are exact for the implemented gain.

Phases that only enter through relative differences are evaluated on the
excess path ``a(t) - r0`` rather than on ``a(t)`` itself. A common phase
rotation does not change any gain magnitude, and dropping the ``r0`` offset
keeps about four more significant digits in the phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

#: relative spacing slack used by every feasibility audit
FEAS_REL_TOL = 1e-9


class InfeasibleLayout(ValueError):
    """A layout violates the box or minimum-spacing constraint."""


@dataclass(frozen=True)
class UserGeometry:
    """User location relative to the array center.

    Parameters
    ----------
    theta0 : float
        Azimuth in radians.
    phi0 : float
        Elevation (polar angle from the z axis) in radians.
    r0 : float
        Distance in meters.
    """

    theta0: float
    phi0: float
    r0: float

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")

    @property
    def w0(self) -> float:
        return math.sin(self.theta0) * math.sin(self.phi0)

    @property
    def u0(self) -> float:
        return math.cos(self.phi0)

    @property
    def position(self) -> np.ndarray:
        """Cartesian user position ``(x, y, z)``."""
        st = math.sin(self.phi0)
        return self.r0 * np.array(
            [math.cos(self.theta0) * st, math.sin(self.theta0) * st, math.cos(self.phi0)]
        )


@dataclass(frozen=True)
class ArrayConfig:
    """Antenna count, square aperture side and minimum spacing (meters)."""

    m_count: int
    aperture: float
    d_min: float

    def __post_init__(self):
        if self.m_count < 1:
            raise ValueError(f"m_count must be >= 1, got {self.m_count}")
        if not (self.aperture > 0 and self.d_min > 0):
            raise ValueError("aperture and d_min must be positive")
        side = math.ceil(math.sqrt(self.m_count))
        if (side - 1) * self.d_min > self.aperture:
            raise ValueError(
                f"aperture {self.aperture} m cannot host {self.m_count} antennas "
                f"at spacing {self.d_min} m"
            )

    @property
    def half_width(self) -> float:
        return 0.5 * self.aperture

    @property
    def eps_feas(self) -> float:
        return FEAS_REL_TOL * self.d_min


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform subcarrier grid ``f_l = f_lo + (l/L)(f_hi - f_lo)``, ``l = 0..L``.

    ``f_center`` defaults to the band midpoint.
    """

    f_lo: float
    f_hi: float
    l_count: int
    f_center: float | None = None

    def __post_init__(self):
        if not 0 < self.f_lo < self.f_hi:
            raise ValueError("need 0 < f_lo < f_hi")
        if self.l_count < 1:
            raise ValueError(f"l_count must be >= 1, got {self.l_count}")
        if self.f_center is None:
            object.__setattr__(self, "f_center", 0.5 * (self.f_lo + self.f_hi))

    @property
    def freqs(self) -> np.ndarray:
        l = np.arange(self.l_count + 1)
        f = self.f_lo + (l / self.l_count) * (self.f_hi - self.f_lo)
        f[-1] = self.f_hi
        return f

    def wavenumber_offset(self, f):
        """``F = 2 pi (f_c - f) / c`` for scalar or array ``f``."""
        return 2.0 * np.pi * (self.f_center - np.asarray(f, dtype=float)) / SPEED_OF_LIGHT

    @property
    def offsets(self) -> np.ndarray:
        return self.wavenumber_offset(self.freqs)

    def with_l_count(self, l_count: int) -> "FrequencyGrid":
        return FrequencyGrid(self.f_lo, self.f_hi, l_count, self.f_center)


def excess_distance(geom: UserGeometry, t) -> np.ndarray:
    """Fresnel distance minus ``r0`` for points ``t`` of shape ``(..., 2)``."""
    t = np.asarray(t, dtype=float)
    y, z = t[..., 0], t[..., 1]
    proj = y * geom.w0 + z * geom.u0
    return -proj + (y * y + z * z - proj * proj) / (2.0 * geom.r0)


def fresnel_distance(geom: UserGeometry, t) -> np.ndarray:
    """Second-order approximation of the antenna-to-user distance."""
    return geom.r0 + excess_distance(geom, t)


def exact_distance(geom: UserGeometry, t) -> np.ndarray:
    """Euclidean distance between the user and antennas at ``t`` (oracle only)."""
    t = np.asarray(t, dtype=float)
    p = np.stack([np.zeros(t.shape[:-1]), t[..., 0], t[..., 1]], axis=-1)
    return np.linalg.norm(geom.position - p, axis=-1)


def _two_product(a: float, b: float) -> tuple[float, float]:
    """Dekker's error-free product: ``a * b == p + e`` exactly."""
    p = a * b
    split = 134217729.0  # 2**27 + 1
    ah = a * split
    ah = ah - (ah - a)
    al = a - ah
    bh = b * split
    bh = bh - (bh - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _bulk_cycles(f: float, r0: float) -> float:
    """Fractional part of ``f r0 / c`` without losing digits to the integer part."""
    p, e = _two_product(float(f), float(r0))
    return (math.fmod(p, SPEED_OF_LIGHT) + e) / SPEED_OF_LIGHT


def steering_vector(positions, geom: UserGeometry, f: float) -> np.ndarray:
    """Normalized near-field response ``exp(-j 2 pi f a(t_m) / c)`` per antenna.

    The bulk phase ``2 pi f r0 / c`` runs to thousands of radians, so it is
    reduced modulo one cycle exactly before the small excess term is added.
    """
    d = excess_distance(geom, positions)
    cycles = _bulk_cycles(f, geom.r0) + float(f) * d / SPEED_OF_LIGHT
    return np.exp(-2j * np.pi * cycles)


def array_gain(positions, geom: UserGeometry, grid: FrequencyGrid, f) -> np.ndarray:
    """Analog beamforming gain ``|w(f_c)^H b(f)|`` at frequency ``f``.

    ``f`` may be scalar or an array; the result has the shape of ``f``.
    """
    return np.sqrt(gain_sq(positions, geom, grid, f))


def gain_sq(positions, geom: UserGeometry, grid: FrequencyGrid, f) -> np.ndarray:
    """Squared gain, the quantity maximized by the optimizers."""
    d = excess_distance(geom, positions)
    # phases relative to the first antenna: a single antenna gives exactly 1
    d = d - d[..., :1]
    F = grid.wavenumber_offset(f)
    s = np.exp(1j * np.multiply.outer(F, d)).sum(axis=-1)
    return s.real ** 2 + s.imag ** 2


def gain_sq_grid(positions, geom: UserGeometry, grid: FrequencyGrid) -> np.ndarray:
    """Squared gain at every subcarrier, shape ``(L+1,)``."""
    return gain_sq(positions, geom, grid, grid.freqs)


def min_gain_sq(positions, geom: UserGeometry, grid: FrequencyGrid) -> float:
    """Max-min objective: the worst squared gain over the subcarrier grid."""
    return float(gain_sq_grid(positions, geom, grid).min())


def others_sum(positions, geom: UserGeometry, F, m: int) -> np.ndarray:
    """``C = sum_{n != m} exp(j F a(t_n))`` (excess-path phase reference).

    ``F`` may be scalar or an array of wavenumber offsets.
    """
    d = excess_distance(geom, positions)
    d = np.delete(d, m)
    if d.size == 0:
        return np.zeros(np.shape(F), dtype=complex)
    return np.exp(1j * np.multiply.outer(F, d)).sum(axis=-1)


def gain_sq_closed_form(positions, geom: UserGeometry, grid: FrequencyGrid, m: int, l: int) -> float:
    """Squared gain written around antenna ``m``.

    ``2|C| cos(F a(t_m) - angle C) + |C|^2 + 1`` with ``C`` the phasor sum of
    the other antennas. An empty or vanishing ``C`` gives 1.
    """
    F = grid.offsets[l]
    c = complex(others_sum(positions, geom, F, m))
    mag = abs(c)
    if mag == 0.0:
        return 1.0
    d_m = float(excess_distance(geom, np.asarray(positions, dtype=float)[m]))
    return 2.0 * mag * math.cos(F * d_m - math.atan2(c.imag, c.real)) + mag * mag + 1.0


def layout_violations(positions, config: ArrayConfig) -> list[str]:
    """Describe every violated box or spacing constraint (empty if feasible)."""
    p = np.asarray(positions, dtype=float)
    problems = []
    if p.shape != (config.m_count, 2):
        return [f"layout shape {p.shape} does not match ({config.m_count}, 2)"]
    if not np.all(np.isfinite(p)):
        return ["layout contains non-finite coordinates"]
    hw = config.half_width + config.eps_feas
    for m in np.flatnonzero(np.any(np.abs(p) > hw, axis=1)):
        problems.append(f"box: antenna {m} at ({p[m, 0]:.6g}, {p[m, 1]:.6g}) outside |y|,|z| <= {config.half_width:.6g}")
    if len(p) > 1:
        dist = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
        iu = np.triu_indices(len(p), k=1)
        bad = dist[iu] < config.d_min - config.eps_feas
        for i, j, d in zip(iu[0][bad], iu[1][bad], dist[iu][bad]):
            problems.append(f"spacing: antennas {i},{j} at distance {d:.6g} < d_min {config.d_min:.6g}")
    return problems


def is_feasible(positions, config: ArrayConfig) -> bool:
    return not layout_violations(positions, config)


def check_layout(positions, config: ArrayConfig) -> None:
    problems = layout_violations(positions, config)
    if problems:
        raise InfeasibleLayout("; ".join(problems))


def random_layout(config: ArrayConfig, rng: np.random.Generator, max_tries: int = 100_000) -> np.ndarray:
    """Rejection-sample a feasible layout uniformly over the aperture."""
    hw = config.half_width
    pts = []
    tries = 0
    while len(pts) < config.m_count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("rejection sampling failed to place all antennas")
        cand = rng.uniform(-hw, hw, 2)
        if all(np.hypot(*(cand - q)) >= config.d_min for q in pts):
            pts.append(cand)
    return np.array(pts).reshape(config.m_count, 2)
