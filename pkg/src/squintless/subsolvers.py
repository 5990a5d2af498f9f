"""Small convex solvers over a single antenna's feasible cell.

The cell is the aperture box intersected with the half-planes obtained by
linearizing every minimum-spacing constraint at the antenna's current
position. Two problems are solved on it: the Euclidean projection of a point
(exact, by enumerating faces and vertices) and the maximization of the
pointwise minimum of concave quadratics in epigraph form. The latter is a
second-order cone program with one cone per quadratic; it is handed either to
an interior-point conic solver (``backend="conic"``) or to SLSQP
(``backend="slsqp"``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .channel import ArrayConfig


class EmptyCell(ValueError):
    """The feasible cell has no point (the reference layout was infeasible)."""


class NonConcaveSurrogate(ValueError):
    """A surrogate quadratic has positive curvature."""


@dataclass(frozen=True)
class ConvexCell2D:
    """``{t : |t_y|, |t_z| <= half_width, normals @ t >= offsets}``.

    ``tol`` is the slack allowed when testing membership.
    """

    half_width: float
    normals: np.ndarray
    offsets: np.ndarray
    tol: float = 0.0

    @classmethod
    def box(cls, half_width, tol=0.0):
        return cls(half_width, np.zeros((0, 2)), np.zeros(0), tol)

    def inequalities(self):
        """All constraints as ``G @ t <= h`` with unit-norm rows."""
        box = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        G = np.vstack([box, -self.normals])
        h = np.concatenate([np.full(4, self.half_width), -self.offsets])
        return G, h

    def violation(self, t) -> float:
        G, h = self.inequalities()
        return float(np.max(G @ np.asarray(t, dtype=float) - h))

    def contains(self, t, tol=None) -> bool:
        return self.violation(t) <= (self.tol if tol is None else tol)


def spacing_cell(positions, m: int, config: ArrayConfig) -> ConvexCell2D:
    """Cell for antenna ``m`` with the others held at ``positions``."""
    p = np.asarray(positions, dtype=float)
    t_ref = p[m]
    others = np.delete(p, m, axis=0)
    diff = t_ref - others
    norm = np.linalg.norm(diff, axis=1)
    if np.any(norm == 0.0):
        raise EmptyCell(f"antenna {m} coincides with another antenna")
    normals = diff / norm[:, None]
    offsets = np.einsum("ij,ij->i", normals, others) + config.d_min
    return ConvexCell2D(config.half_width, normals, offsets, config.eps_feas)


def project_p6(cell: ConvexCell2D, t_raw) -> np.ndarray:
    """Euclidean projection of ``t_raw`` onto the cell.

    Returns ``t_raw`` itself when it is already feasible. Otherwise the
    projection lies either on one violated face or on a vertex, so the
    nearest feasible candidate among those is the exact minimizer.
    """
    t = np.asarray(t_raw, dtype=float)
    G, h = cell.inequalities()
    slack = G @ t - h
    # vertices carry rounding from the 2x2 solve, so allow a few ulps; the
    # same slack admits the result on re-projection, keeping P(P(x)) == P(x)
    tol = max(cell.tol, 64 * np.finfo(float).eps * max(1.0, float(np.abs(h).max())))
    if slack.max() <= tol:
        return t.copy()

    cands = [t - slack[i] * G[i] for i in np.flatnonzero(slack > 0)]
    i, j = np.triu_indices(len(h), k=1)
    det = G[i, 0] * G[j, 1] - G[i, 1] * G[j, 0]
    ok = np.abs(det) > 1e-12
    i, j, det = i[ok], j[ok], det[ok]
    vy = (h[i] * G[j, 1] - h[j] * G[i, 1]) / det
    vz = (G[i, 0] * h[j] - G[j, 0] * h[i]) / det
    cands.extend(np.stack([vy, vz], axis=1))
    cands = np.asarray(cands)

    feas = (cands @ G.T - h).max(axis=1) <= tol
    if not feas.any():
        raise EmptyCell("projection found no feasible point")
    cands = cands[feas]
    return cands[np.argmin(np.sum((cands - t) ** 2, axis=1))].copy()


@dataclass(frozen=True)
class SurrogateSet:
    """Concave quadratics ``q_k(t) = value_k + grad_k.d + d.curv_k.d / 2``, ``d = t - center``."""

    center: np.ndarray
    values: np.ndarray
    grads: np.ndarray
    curvatures: np.ndarray

    def __call__(self, t) -> np.ndarray:
        d = np.asarray(t, dtype=float) - self.center
        return self.values + self.grads @ d + 0.5 * np.einsum("i,kij,j->k", d, self.curvatures, d)

    def jacobian(self, t) -> np.ndarray:
        d = np.asarray(t, dtype=float) - self.center
        return self.grads + self.curvatures @ d


@dataclass(frozen=True)
class MaxMinSolution:
    t_opt: np.ndarray
    kappa: float
    active_set: np.ndarray
    iterations: int


def solve_p4(cell: ConvexCell2D, surrogates: SurrogateSet, backend: str = "conic",
             max_iter: int = 200) -> MaxMinSolution:
    """Maximize ``min_k q_k(t)`` over the cell.

    The surrogates' common expansion point must lie in the cell. The
    returned point never scores below that point; on ties the expansion
    point itself is returned. Conic-solver failures fall back to SLSQP.
    """
    if backend not in ("conic", "slsqp"):
        raise ValueError(f"unknown backend {backend!r}")
    curv = np.asarray(surrogates.curvatures, dtype=float)
    if curv.size and np.linalg.eigvalsh(curv).max() > 1e-8:
        raise NonConcaveSurrogate("surrogate curvature has a positive eigenvalue")
    center = np.asarray(surrogates.center, dtype=float)
    if not cell.contains(center):
        raise EmptyCell("expansion point lies outside the cell")

    q0 = surrogates(center)
    kappa0 = float(q0.min())
    t_new, nit = None, 0
    if backend == "conic" and np.allclose(curv[:, 0, 1], 0) and np.allclose(curv[:, 1, 0], 0):
        t_new, nit = _solve_conic(cell, surrogates, q0)
    if t_new is None:
        t_new, nit = _solve_slsqp(cell, surrogates, q0, max_iter)

    if not cell.contains(t_new):
        t_new = project_p6(cell, t_new)
    q_new = surrogates(t_new)
    if q_new.min() <= kappa0:
        t_new, q_new = center.copy(), q0
    kappa = float(q_new.min())
    vscale = max(1.0, float(np.abs(q0).max()))
    active = np.flatnonzero(q_new <= kappa + 1e-9 * vscale)
    return MaxMinSolution(t_new, kappa, active, nit)


def _solve_slsqp(cell, surrogates, q0, max_iter, ftol=1e-15):
    center = np.asarray(surrogates.center, dtype=float)
    G, h = cell.inequalities()
    # positions in units of half_width, kappa in units of vscale
    s_t = cell.half_width
    vscale = max(1.0, float(np.abs(q0).max()))

    def unpack(x):
        return center + s_t * x[:2], x[2]

    def epi(x):
        t, k = unpack(x)
        return surrogates(t) / vscale - k

    def epi_jac(x):
        t, _ = unpack(x)
        J = surrogates.jacobian(t) * (s_t / vscale)
        return np.hstack([J, -np.ones((len(J), 1))])

    def lin(x):
        t, _ = unpack(x)
        return (h - G @ t) / s_t

    lin_jac = np.hstack([-G, np.zeros((len(h), 1))])
    x0 = np.array([0.0, 0.0, float(q0.min()) / vscale])
    res = minimize(
        lambda x: -x[2],
        x0,
        jac=lambda x: np.array([0.0, 0.0, -1.0]),
        method="SLSQP",
        constraints=[
            {"type": "ineq", "fun": epi, "jac": epi_jac},
            {"type": "ineq", "fun": lin, "jac": lambda x: lin_jac},
        ],
        options={"maxiter": max_iter, "ftol": ftol},
    )
    t_new = unpack(res.x)[0] if np.all(np.isfinite(res.x)) else center.copy()
    return t_new, int(res.nit)


@lru_cache(maxsize=32)
def _conic_problem(n_quad: int, n_lin: int):
    import cvxpy as cp

    d = cp.Variable(2)
    kappa = cp.Variable()
    val = cp.Parameter(n_quad)
    grad = cp.Parameter((n_quad, 2))
    sy = cp.Parameter(n_quad, nonneg=True)
    sz = cp.Parameter(n_quad, nonneg=True)
    A = cp.Parameter((n_lin, 2))
    b = cp.Parameter(n_lin)
    curv = 0.5 * (cp.square(cp.multiply(sy, d[0])) + cp.square(cp.multiply(sz, d[1])))
    prob = cp.Problem(cp.Maximize(kappa), [curv <= val + grad @ d - kappa, A @ d <= b])
    return prob, d, (val, grad, sy, sz, A, b)


def _solve_conic(cell, surrogates, q0):
    """Interior-point SOCP solve for diagonal curvatures; ``None`` on failure."""
    try:
        import cvxpy as cp
    except ImportError:
        return None, 0
    center = np.asarray(surrogates.center, dtype=float)
    G, h = cell.inequalities()
    s_t = cell.half_width
    vscale = max(1.0, float(np.abs(q0).max()))
    prob, d, (val, grad, sy, sz, A, b) = _conic_problem(len(q0), len(h))
    # same scaling as the SLSQP path: d in units of half_width, values of vscale
    val.value = surrogates.values / vscale
    grad.value = surrogates.grads * (s_t / vscale)
    c = np.asarray(surrogates.curvatures)
    sy.value = np.sqrt(np.maximum(-c[:, 0, 0], 0.0) / vscale) * s_t
    sz.value = np.sqrt(np.maximum(-c[:, 1, 1], 0.0) / vscale) * s_t
    A.value = G
    b.value = (h - G @ center) / s_t
    try:
        with warnings.catch_warnings():
            # inaccurate solutions are screened by the caller
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    except cp.SolverError:
        return None, 0
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or d.value is None:
        return None, 0
    iters = prob.solver_stats.num_iters or 0
    return center + s_t * np.asarray(d.value), int(iters)
