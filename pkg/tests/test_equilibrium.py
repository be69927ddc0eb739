import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nibm.equilibrium import (GridOverlapWarning, assemble_energy, edge_exponent_fit, el_residual, external_fields,
                              kkt_residual, measure_energy, project_simplex, solve_equilibrium, solve_grid_qp,
                              support_containment_check)
from nibm.errors import InsufficientResolution, MaxIterationsExceeded
from nibm.graph import ProblemConfig, build_tree, interaction_matrix

from conftest import TWO_BY_TWO


def _solve(cfg, m, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridOverlapWarning)
        return solve_equilibrium(cfg, build_tree(m), **kw)


def semicircle_l1(sol):
    x = np.linspace(-1.2, 1.2, 24001)
    ref = 2 / np.pi * np.sqrt(np.clip(1 - x * x, 0, None))
    return float(np.trapezoid(np.abs(sol.density(0, x) - ref), x))


def test_semicircle_refined(semicircle_sol):
    sol = semicircle_sol
    assert sol.method == "one-cut"
    assert np.allclose(sol.supports[0], [-1, 1], atol=1e-9)
    assert semicircle_l1(sol) < 1e-8
    # E = log 2 + 3/4 for the semicircle in the field 2x^2
    assert measure_energy(sol) == pytest.approx(np.log(2) + 0.75, abs=1e-10)
    assert el_residual(sol)[0].L == pytest.approx(1 + 2 * np.log(2), abs=1e-10)


def test_semicircle_grid_only(semicircle_grid_sol):
    sol = semicircle_grid_sol
    assert sol.method == "grid"
    # pointwise, the step function is off by about h/4 * int |rho'|
    assert semicircle_l1(sol) < 1e-3
    # cell masses against the exact integrals of the semicircle over each cell
    g = sol.grid_measures[0]
    e = np.clip(g.edges, -1, 1)
    F = (e * np.sqrt(1 - e * e) + np.arcsin(e)) / np.pi
    assert np.abs(g.weights - np.diff(F)).sum() < 1e-4
    assert np.allclose(sol.supports[0], [-1, 1], atol=2e-3)
    for side in ("left", "right"):
        e, _ = edge_exponent_fit(sol, 0, side)
        assert abs(e - 0.5) < 0.05


def test_grid_and_refined_supports_agree(pq2_sol, pq2_grid_sol):
    h = max(np.diff(m.edges).max() for m in pq2_grid_sol.grid_measures)
    assert np.allclose(pq2_sol.supports, pq2_grid_sol.supports, atol=3 * h)


def test_masses_and_symmetry(pq2_sol):
    masses = [m.mass for m in pq2_sol.measures]
    assert np.allclose(masses, 1 / 3, atol=1e-12)
    s = pq2_sol.supports
    # the fixture is symmetric under x -> -x, which swaps edges 1 and 3
    assert np.allclose(s[0], -s[2][::-1], atol=1e-10)
    assert s[1][0] == pytest.approx(-s[1][1], abs=1e-10)
    x = np.linspace(0.9, 1.1, 7)
    assert np.allclose(pq2_sol.density(0, x), pq2_sol.density(2, -x), atol=1e-9)


def test_euler_lagrange_grid_solution(pq2_grid_sol):
    for r in el_residual(pq2_grid_sol):
        assert r.scaled < 1e-4
        assert r.gap_midpoint_min > 0
        assert r.off_support_min > -1e-6


def test_containment(pq2_sol):
    eps = 0.5 * np.min(np.abs(np.diff(pq2_sol.fields.centers)))
    assert all(support_containment_check(pq2_sol, eps))


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_scaling_covariance(semicircle, s):
    # x -> s x with T -> s^2 T leaves V/T invariant up to the map
    cfg, m = semicircle
    sol = _solve(ProblemConfig((0.0,), (0.0,), 0.5, s * s), m, grid=400)
    assert np.allclose(sol.supports[0], [-s, s], atol=1e-9)


def test_translation_covariance(two_by_two):
    cfg, m = two_by_two
    base = _solve(cfg, m, grid=300)
    c = 0.7
    moved = _solve(ProblemConfig(tuple(a + c for a in cfg.a), tuple(b + c for b in cfg.b), cfg.t, cfg.T), m, grid=300)
    assert np.allclose(moved.supports, base.supports + c, atol=1e-9)


def test_zero_mass_component(two_by_two):
    cfg, m = two_by_two
    sol = _solve(cfg, m, grid=300, masses=[0.5, 0.0, 0.5])
    assert sol.measures[1] is None and np.all(np.isnan(sol.supports[1]))
    assert sol.measures[0].mass == pytest.approx(0.5, abs=1e-12)
    reps = el_residual(sol)
    assert reps[1].trivial and reps[0].scaled < 1e-10


def test_max_iterations_keeps_best_iterate(two_by_two):
    cfg, m = two_by_two
    with pytest.raises(MaxIterationsExceeded) as ei:
        _solve(cfg, m, grid=300, max_iter=1)
    sol = ei.value.solution
    assert sol is not None and not sol.converged
    assert np.allclose([g.mass for g in sol.grid_measures], 1 / 3, atol=1e-12)


def test_too_coarse_for_edge_fit(two_by_two):
    cfg, m = two_by_two
    sol = _solve(cfg, m, grid=20, refine=False)
    with pytest.raises(InsufficientResolution):
        edge_exponent_fit(sol, 0, "left")


def _small_energy(cells=64):
    cfg, m = TWO_BY_TWO
    tree = build_tree(m)
    A, _ = interaction_matrix(tree)
    fields = external_fields(cfg, tree)
    grids = [np.linspace(c - 0.2, c + 0.2, cells + 1) for c in fields.centers]
    return assemble_energy(fields, A, grids), fields


def test_energy_positive_definite_on_zero_mean():
    energy, _ = _small_energy()
    Q = energy.dense()
    assert np.allclose(Q, Q.T, atol=1e-12)
    n = Q.shape[0]
    # basis of vectors with zero sum inside each component
    P = []
    for i in range(len(energy.grids)):
        lo, hi = energy.offsets[i], energy.offsets[i + 1]
        for j in range(lo, hi - 1):
            v = np.zeros(n)
            v[j], v[j + 1] = 1.0, -1.0
            P.append(v)
    P = np.array(P).T
    assert np.linalg.eigvalsh(P.T @ Q @ P).min() > 0


def test_qp_history_monotone_and_kkt():
    energy, fields = _small_energy()
    res = solve_grid_qp(energy, fields.masses, tol=1e-9)
    assert res.converged
    assert np.all(np.diff(res.history) <= 1e-13 * np.abs(res.history[:-1]).max())
    for L, spread, viol in kkt_residual(energy, res.weights):
        assert spread < 1e-8 and viol < 1e-8


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30), st.floats(0.01, 3))
def test_project_simplex(v, mass):
    v = np.array(v)
    w = project_simplex(v, mass)
    assert np.all(w >= 0) and w.sum() == pytest.approx(mass, rel=1e-12)
    # optimality: w is closer to v than any vertex of the simplex
    for j in range(v.size):
        e = np.zeros(v.size)
        e[j] = mass
        assert np.linalg.norm(w - v) <= np.linalg.norm(e - v) + 1e-12
