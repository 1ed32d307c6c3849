import json

import numpy as np
import pytest

from bepo.assembly import assemble_matrix, assemble_rhs, assemble_system
from bepo.errors import NoConvergence
from bepo.grid import GridSpec, build_grid
from bepo.model import ModelParams
from bepo.observables import constant_observable, mollified_crossing_speed
from bepo.solver import (
    SolverConfig,
    evaluate_statistic,
    magnitude_violations,
    solution_to_csv,
    solve_resolvent,
    summary_to_json,
)

MODEL = ModelParams()


@pytest.fixture(scope="module")
def grid9():
    return build_grid(GridSpec(lam=1e-2, I=9, J=9, K=9))


@pytest.fixture(scope="module")
def matrix9(grid9):
    return assemble_matrix(grid9, MODEL, 1e-2)


def test_constant_rhs_gives_constant_solution(grid9, matrix9):
    matrix9.rhs = assemble_rhs(grid9, constant_observable(1.0), 1e-2)
    rep = solve_resolvent(matrix9)
    assert np.abs(rep.v - 1.0).max() < 1e-9
    value, spread = evaluate_statistic(rep.v, grid9)
    assert value == pytest.approx(1.0, abs=1e-10)
    assert spread < 1e-10
    assert rep.residual <= 1e-10 * np.linalg.norm(matrix9.rhs)


def test_scaling_linearity(grid9, matrix9):
    matrix9.rhs = assemble_rhs(grid9, constant_observable(1.0), 1e-2)
    v1 = solve_resolvent(matrix9).v
    matrix9.rhs = assemble_rhs(grid9, constant_observable(-3.0), 1e-2)
    v3 = solve_resolvent(matrix9).v
    assert np.abs(v3 - (-3.0) * v1).max() < 1e-8


def test_zero_rhs(grid9, matrix9):
    matrix9.rhs = np.zeros(matrix9.n)
    rep = solve_resolvent(matrix9)
    assert (rep.v == 0).all()
    assert rep.residual == 0.0
    assert rep.iterations == 0


def test_solver_linearity_on_combinations(grid9, matrix9):
    ga = mollified_crossing_speed(0.0, 1.0)
    gb = constant_observable(0.5)
    ra = assemble_rhs(grid9, ga, 1e-2)
    rb = assemble_rhs(grid9, gb, 1e-2)
    matrix9.rhs = ra
    va = solve_resolvent(matrix9).v
    matrix9.rhs = rb
    vb = solve_resolvent(matrix9).v
    matrix9.rhs = 2.0 * ra + 0.25 * rb
    vc = solve_resolvent(matrix9).v
    assert np.abs(vc - (2.0 * va + 0.25 * vb)).max() < 1e-8


def test_determinism(grid9):
    sys1 = assemble_system(grid9, MODEL, mollified_crossing_speed(0.5, 0.8), 1e-2)
    sys2 = assemble_system(grid9, MODEL, mollified_crossing_speed(0.5, 0.8), 1e-2)
    r1 = solve_resolvent(sys1)
    r2 = solve_resolvent(sys2)
    assert np.array_equal(r1.v, r2.v)
    assert r1.residual == r2.residual
    assert r1.iterations == r2.iterations


def test_no_convergence_raises(grid9, matrix9):
    matrix9.rhs = assemble_rhs(grid9, mollified_crossing_speed(0.0, 1.0), 1e-2)
    cfg = SolverConfig(rel_tol=1e-14, max_iters=2, restart=3, polish_factor=1.0)
    with pytest.raises(NoConvergence):
        solve_resolvent(matrix9, cfg)


def test_evaluate_statistic_shapes():
    grid = build_grid(GridSpec(lam=1.0, I=9, J=9, K=9))
    v = np.full(9**3, 0.7)
    value, spread = evaluate_statistic(v, grid)
    assert value == 0.7 and spread == 0.0
    # perturbation inside the central half-box moves the spread
    v3 = v.reshape(9, 9, 9).copy()
    v3[4, 4, 0] += 0.01
    value, spread = evaluate_statistic(v3.ravel(), grid)
    assert spread == pytest.approx(0.01)
    # corner perturbation outside the half-box does not
    v3 = v.reshape(9, 9, 9).copy()
    v3[0, 0, 0] += 5.0
    _, spread = evaluate_statistic(v3.ravel(), grid)
    assert spread == 0.0


def test_magnitude_violations_locates_nodes():
    grid = build_grid(GridSpec(lam=1.0, I=5, J=5, K=5))
    v = np.zeros(125)
    v[0] = 2.0
    out = magnitude_violations(v, grid, sup_g=1.0)
    assert out == [(1, 1, 1, 2.0)]
    assert magnitude_violations(v, grid, sup_g=2.0) == []


def test_exports(tmp_path, grid9, matrix9):
    matrix9.rhs = assemble_rhs(grid9, constant_observable(1.0), 1e-2)
    rep = solve_resolvent(matrix9)
    rep.statistic, rep.spread = evaluate_statistic(rep.v, grid9)
    csv = tmp_path / "solution.csv"
    solution_to_csv(rep.v, grid9, csv)
    lines = csv.read_text().splitlines()
    assert lines[0] == "i,j,k,x,y,z,v"
    assert len(lines) == 1 + 9**3
    js = tmp_path / "summary.json"
    summary_to_json(rep, js)
    data = json.loads(js.read_text())
    assert set(data) == {"statistic", "spread", "residual", "iterations"}
    assert data["statistic"] == pytest.approx(1.0, abs=1e-9)


def test_direct_fallback_matches_gmres(grid9, matrix9):
    from bepo.solver import solve_direct

    matrix9.rhs = assemble_rhs(grid9, mollified_crossing_speed(0.3, 0.9), 1e-2)
    iterative = solve_resolvent(matrix9)
    direct = solve_direct(matrix9)
    assert np.abs(direct.v - iterative.v).max() < 1e-8
    assert direct.residual <= 1e-8 * np.linalg.norm(matrix9.rhs)
