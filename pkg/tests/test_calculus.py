import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from squintless import (
    ArrayConfig,
    FrequencyGrid,
    UserGeometry,
    gain_sq,
    gain_sq_closed_form,
    grad_h,
    grad_k_wrt_f,
    hess_h,
    hessian_lower_bound,
    random_layout,
    spacing_linearization,
    surrogate_h,
)
from squintless.calculus import derivative_ranges, hessian_from_phase

from conftest import APERTURE, D_MIN, F0, FC, FL


def _moved(p, m, t):
    q = p.copy()
    q[m] = t
    return q


def _fd_grad(p, geom, grid, m, l, step):
    g = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        g[i] = (gain_sq_closed_form(_moved(p, m, p[m] + e), geom, grid, m, l)
                - gain_sq_closed_form(_moved(p, m, p[m] - e), geom, grid, m, l)) / (2 * step)
    return g


def test_gradient_zero_at_center_tone(geom, grid, array16, rng):
    p = random_layout(array16, rng)
    l = int(np.flatnonzero(grid.offsets == 0.0)[0])
    np.testing.assert_array_equal(grad_h(p, geom, grid, 5, l), 0.0)


def test_single_antenna_derivatives_vanish(geom, grid):
    p = np.array([[0.01, -0.02]])
    np.testing.assert_array_equal(grad_h(p, geom, grid, 0, 7), 0.0)
    np.testing.assert_array_equal(hess_h(p, geom, grid, 0, 7), 0.0)
    assert grad_k_wrt_f(p, geom, grid, 59.1e9) == pytest.approx(0.0, abs=1e-20)


def test_gradient_matches_finite_differences(geom, grid, array16, rng):
    step = 1e-7 * APERTURE
    for _ in range(25):
        p = random_layout(array16, rng)
        m, l = int(rng.integers(16)), int(rng.choice([0, 40, 200, 256]))
        fd = _fd_grad(p, geom, grid, m, l, step)
        g = grad_h(p, geom, grid, m, l)
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)


def test_hessian_matches_finite_differences(geom, grid, array16, rng):
    step = 1e-7 * APERTURE
    for _ in range(25):
        p = random_layout(array16, rng)
        m, l = int(rng.integers(16)), int(rng.choice([0, 60, 256]))
        cols = []
        for e in np.eye(2) * step:
            cols.append((grad_h(_moved(p, m, p[m] + e), geom, grid, m, l)
                         - grad_h(_moved(p, m, p[m] - e), geom, grid, m, l)) / (2 * step))
        fd = np.column_stack(cols)
        H = hess_h(p, geom, grid, m, l)
        assert np.linalg.norm(H - fd) <= 1e-4 * np.linalg.norm(fd)


def test_hessian_exactly_symmetric(geom, grid, array16, rng):
    for _ in range(10):
        p = random_layout(array16, rng)
        H = hess_h(p, geom, grid, int(rng.integers(16)), int(rng.integers(257)))
        assert H[0, 1] == H[1, 0]


def test_frequency_gradient_matches_finite_differences(geom, grid, array16, rng):
    step = 1e3
    for f in (FC + 7e6, 58.95e9, 60.6e9, 61.0e9):
        p = random_layout(array16, rng)
        fd = (gain_sq(p, geom, grid, f + step) - gain_sq(p, geom, grid, f - step)) / (2 * step)
        assert abs(grad_k_wrt_f(p, geom, grid, f) - fd) <= 1e-5 * abs(fd)


def test_frequency_gradient_vanishes_at_interior_stationary_point(geom, grid, array16, rng):
    p = random_layout(array16, rng)
    f = np.linspace(F0, FL, 4001)
    h = gain_sq(p, geom, grid, f)
    interior = [k for k in range(1, len(f) - 1) if h[k] >= h[k - 1] and h[k] >= h[k + 1]]
    assert interior
    k = interior[0]
    res = minimize_scalar(lambda x: -gain_sq(p, geom, grid, x), bounds=(f[k - 1], f[k + 1]),
                          method="bounded", options={"xatol": 1.0})
    typical = np.abs([grad_k_wrt_f(p, geom, grid, x) for x in f[::200]]).mean()
    assert abs(grad_k_wrt_f(p, geom, grid, res.x)) <= 1e-6 * typical


def test_derivative_ranges_closed_form(geom):
    hw = APERTURE / 2
    w0, u0, r0 = geom.w0, geom.u0, geom.r0
    (c1l, c1u), (c2l, c2u) = derivative_ranges(geom, hw)
    assert c1l == pytest.approx(-hw * (1 - w0 ** 2 + abs(w0 * u0)) / r0 - w0, rel=1e-15)
    assert c1u == pytest.approx(hw * (1 - w0 ** 2 + abs(w0 * u0)) / r0 - w0, rel=1e-15)
    assert c2l == pytest.approx(-hw * (1 - u0 ** 2 + abs(w0 * u0)) / r0 - u0, rel=1e-15)
    assert c2u == pytest.approx(hw * (1 - u0 ** 2 + abs(w0 * u0)) / r0 - u0, rel=1e-15)
    # the interval must contain the path derivative at every aperture corner
    for y in (-hw, hw):
        for z in (-hw, hw):
            proj = y * w0 + z * u0
            assert c1l <= (y - proj * w0) / r0 - w0 <= c1u
            assert c2l <= (z - proj * u0) / r0 - u0 <= c2u


def test_bound_zero_for_zero_c(geom, grid, array16):
    b = hessian_lower_bound(geom, array16, grid, 0.0, 17)
    np.testing.assert_array_equal(b.m_matrix, 0.0)


def test_bound_independent_of_position(geom, grid, array16):
    a = hessian_lower_bound(geom, array16, grid, 7.25, 31).m_matrix
    b = hessian_lower_bound(geom, array16, grid, 7.25, 31).m_matrix
    assert np.array_equal(a, b)


def test_bound_below_hessian_extreme_c(geom, grid, array16, rng):
    hw = APERTURE / 2
    for l in (0, 64, 256):
        bound = hessian_lower_bound(geom, array16, grid, 15.0, l).m_matrix
        t = rng.uniform(-hw, hw, (100_000, 2))
        H = hessian_from_phase(geom, t, grid.offsets[l], 15.0, rng.uniform(-np.pi, np.pi))
        assert np.linalg.eigvalsh(H - bound)[:, 0].min() >= -1e-8


def test_surrogate_tight_and_first_order(geom, grid, array16, rng):
    p = random_layout(array16, rng)
    m, l = 4, 10
    h0 = gain_sq_closed_form(p, geom, grid, m, l)
    assert surrogate_h(p, geom, array16, grid, m, l, p[m]) == pytest.approx(h0, abs=1e-12)
    errs = []
    for s in (1e-4, 1e-5):
        t = p[m] + s * np.array([0.6, 0.8])
        errs.append(abs(surrogate_h(p, geom, array16, grid, m, l, t)
                        - gain_sq_closed_form(_moved(p, m, t), geom, grid, m, l)))
    # quadratic decay: a 10x smaller step shrinks the gap about 100x
    assert errs[1] <= errs[0] / 50


def test_surrogate_minorizes(geom, grid, array16, rng):
    hw = APERTURE / 2
    for _ in range(20):
        p = random_layout(array16, rng)
        m = int(rng.integers(16))
        for _ in range(25):
            l = int(rng.integers(257))
            t = rng.uniform(-hw, hw, 2)
            q = surrogate_h(p, geom, array16, grid, m, l, t)
            assert q <= gain_sq_closed_form(_moved(p, m, t), geom, grid, m, l) + 1e-9


def test_spacing_linearization_cases():
    t_ref, t_s = np.array([0.3, -0.1]), np.array([0.0, 0.2])
    assert spacing_linearization(t_ref, t_s, t_ref) == pytest.approx(np.linalg.norm(t_ref - t_s), rel=1e-15)
    assert spacing_linearization(t_ref, t_s, t_s) == 0.0
    with pytest.raises(ValueError):
        spacing_linearization(t_s, t_s, t_ref)


vec = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).map(np.array)


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec)
def test_spacing_linearization_lower_bound(t_ref, t_s, t):
    if np.linalg.norm(t_ref - t_s) < 1e-9:
        return
    assert spacing_linearization(t_ref, t_s, t) <= np.linalg.norm(t - t_s) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(0.1, 3.0), st.floats(2.0, 50.0), st.floats(0, 20), st.floats(-3.14, 3.14))
def test_bound_holds_for_other_geometries(theta, phi, r0, c_mag, c_phase):
    geom = UserGeometry(theta, phi, r0)
    array = ArrayConfig(16, APERTURE, D_MIN)
    grid = FrequencyGrid(F0, FL, 8, FC)
    rng = np.random.default_rng(0)
    t = rng.uniform(-APERTURE / 2, APERTURE / 2, (2000, 2))
    for l in (0, 8):
        bound = hessian_lower_bound(geom, array, grid, c_mag, l).m_matrix
        H = hessian_from_phase(geom, t, grid.offsets[l], c_mag, c_phase)
        scale = max(1.0, np.abs(H).max())
        assert np.linalg.eigvalsh(H - bound)[:, 0].min() >= -1e-12 * scale
