import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nibm.measures import ChebMeasure, GridMeasure, cell_log_matrix, interval_log_energy, on_side

SEMI = ChebMeasure(0.0, 1.0, [2 / np.pi])  # (2/pi) sqrt(1 - x^2)


def semi_density(x):
    return 2 / np.pi * np.sqrt(np.clip(1 - x * x, 0, None))


def test_unit_square_log_energy():
    # int_0^1 int_0^1 log(1/|x-y|) = 3/2
    assert interval_log_energy(0, 1, 0, 1) == pytest.approx(1.5, abs=1e-14)


def test_cell_log_matrix_against_quadrature():
    e = np.array([0.0, 0.3, 0.5, 1.2])
    M = cell_log_matrix(e, e)
    assert np.allclose(M, M.T, atol=1e-14)
    # average over a square cell of side h is 3/2 - log h
    assert M[1, 1] == pytest.approx(1.5 - np.log(0.2), abs=1e-13)
    for i, j in [(0, 2), (1, 2)]:
        val = mpmath.quad(lambda x, y: -mpmath.log(abs(x - y)), [e[i], e[i + 1]], [e[j], e[j + 1]])
        assert M[i, j] == pytest.approx(float(val) / ((e[i + 1] - e[i]) * (e[j + 1] - e[j])), rel=1e-9)


def test_semicircle_closed_forms():
    assert SEMI.mass == pytest.approx(1.0, abs=1e-15)
    x = np.linspace(-0.99, 0.99, 11)
    assert np.allclose(SEMI.density(x), semi_density(x), atol=1e-15)
    # U(x) = 1/2 + log 2 - x^2 on the support
    assert np.allclose(SEMI.potential(x), 0.5 + np.log(2) - x * x, atol=1e-13)
    z = np.array([2.0 + 0.5j, -0.3 + 0.2j, 3.0 - 1.0j])
    assert np.allclose(SEMI.cauchy(z), 2 * (z - np.sqrt(z - 1) * np.sqrt(z + 1)), atol=1e-13)


def test_cauchy_boundary_values():
    x = np.linspace(-0.9, 0.9, 7)
    up = SEMI.cauchy(on_side(x, 1))
    dn = SEMI.cauchy(on_side(x, -1))
    assert np.allclose(up, np.conj(dn), atol=1e-14)
    assert np.allclose(-up.imag / np.pi, semi_density(x), atol=1e-13)


def test_cheb_logpot_against_quadrature():
    m = ChebMeasure(0.4, 0.7, [0.5, 0.1, -0.05])
    for z in (1.5 + 0.3j, -1.0 - 0.2j, 0.4 + 2.0j):
        re, _ = integrate.quad(lambda s: np.log(abs(z - s)) * m.density(s), 0.4 - 0.7, 0.4 + 0.7,
                               limit=200, epsabs=1e-13)
        assert m.logpot(np.array([z]))[0].real == pytest.approx(re, abs=1e-11)
        cr, _ = integrate.quad(lambda s: (1 / (z - s)).real * m.density(s), -0.3, 1.1, limit=200, epsabs=1e-13)
        ci, _ = integrate.quad(lambda s: (1 / (z - s)).imag * m.density(s), -0.3, 1.1, limit=200, epsabs=1e-13)
        assert m.cauchy(np.array([z]))[0] == pytest.approx(cr + 1j * ci, abs=1e-11)


def test_quadrature_rule_integrates_polynomials():
    m = ChebMeasure(0.2, 0.5, [0.3, 0.05])
    x, w = m.quadrature(64)
    assert np.sum(w) == pytest.approx(m.mass, rel=1e-13)
    exact, _ = integrate.quad(lambda s: s ** 3 * m.density(s), -0.3, 0.7, epsabs=1e-14)
    assert np.sum(w * x ** 3) == pytest.approx(exact, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=12), st.floats(-2, 2), st.floats(0.1, 3))
def test_grid_potential_matches_cell_quadrature(w, x0, span):
    w = np.array(w)
    if w.sum() == 0:
        w[0] = 1.0
    e = np.linspace(x0, x0 + span, w.size + 1)
    g = GridMeasure(e, w)
    pts = np.array([x0 - 0.7, x0 + 0.5 * span + 1e-3, x0 + span + 1.3])
    h = span / w.size
    ref = [sum(wm / h * integrate.quad(lambda y: -np.log(abs(p - y)), e[m], e[m + 1],
                                        points=[p] if e[m] < p < e[m + 1] else None)[0]
               for m, wm in enumerate(w)) for p in pts]
    assert np.allclose(g.potential(pts), ref, atol=1e-9)


def test_grid_measure_cauchy_and_logpot():
    e = np.array([0.0, 1.0])
    g = GridMeasure(e, [1.0])
    z = np.array([2.0 + 0j, 0.5 + 1j])
    assert np.allclose(g.cauchy(z), np.log(z / (z - 1)))
    # int_0^1 log(2 - y) dy = 2 log 2 - 1
    assert g.logpot(np.array([2.0 + 0j]))[0].real == pytest.approx(2 * np.log(2) - 1, abs=1e-14)
    assert g.potential(np.array([2.0]))[0] == pytest.approx(1 - 2 * np.log(2), abs=1e-14)


def test_on_side_signed_zero():
    z = on_side(np.array([0.5, -1.0]), -1)
    assert np.all(np.signbit(z.imag))
    z = on_side(np.array([0.5]), 1)
    assert not np.signbit(z.imag).any()
