import numpy as np
import pytest

from squintless import (
    ArrayConfig,
    NoFeasibleParticle,
    NonSquareM,
    PsoParams,
    fpa_layout,
    gain_sq_grid,
    is_feasible,
    run_pso,
)

from conftest import APERTURE, D_MIN


def test_fpa_two_by_two():
    d = 0.01
    p = fpa_layout(ArrayConfig(4, 1.0, d))
    assert {tuple(r) for r in p} == {(-d / 2, -d / 2), (-d / 2, d / 2), (d / 2, -d / 2), (d / 2, d / 2)}


def test_fpa_sixteen_spacing(array16):
    p = fpa_layout(array16)
    dist = np.linalg.norm(p[:, None] - p[None], axis=-1)[np.triu_indices(16, 1)]
    assert dist.min() >= D_MIN * (1 - 1e-12)
    assert is_feasible(p, array16)
    assert np.array_equal(p, fpa_layout(array16))


def test_fpa_single():
    np.testing.assert_array_equal(fpa_layout(ArrayConfig(1, 1.0, 0.1)), [[0.0, 0.0]])


def test_fpa_non_square():
    array = ArrayConfig(5, APERTURE, D_MIN)
    with pytest.raises(NonSquareM):
        fpa_layout(array)
    assert is_feasible(fpa_layout(array, allow_rectangular=True), array)


def test_pso_single_antenna(geom, small_grid):
    res = run_pso(geom, ArrayConfig(1, APERTURE, D_MIN), small_grid, PsoParams(max_iters=5))
    assert res.objective == 1.0


def test_pso_from_grid_not_worse(geom, small_grid, array16):
    fpa_obj = gain_sq_grid(fpa_layout(array16), geom, small_grid).min()
    res = run_pso(geom, array16, small_grid, PsoParams(init="fpa", max_iters=30))
    assert res.objective >= fpa_obj
    assert is_feasible(res.positions, array16)


def test_pso_traces_monotone_and_seeded(geom, small_grid, array16):
    a = run_pso(geom, array16, small_grid, PsoParams(max_iters=40, seed=3))
    b = run_pso(geom, array16, small_grid, PsoParams(max_iters=40, seed=3))
    assert np.diff(a.best_trace).min() >= 0
    assert np.diff(a.objective_trace).min() >= 0
    assert a.objective == b.objective and np.array_equal(a.positions, b.positions)
    assert is_feasible(a.positions, array16)


def test_pso_no_feasible_particle(geom, small_grid):
    # four antennas fit only at the exact corners of a D_min square
    array = ArrayConfig(4, D_MIN, D_MIN)
    with pytest.raises(NoFeasibleParticle) as exc:
        run_pso(geom, array, small_grid, PsoParams(max_iters=3))
    assert exc.value.best_penalized.shape == (4, 2)
