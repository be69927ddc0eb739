"""Measures on the real line and their logarithmic potentials.

Two representations are used:

* :class:`GridMeasure` -- piecewise-constant density on cells; every integral
  against ``log|x - y|`` or ``1/(z - y)`` is done in closed form per cell.
* :class:`ChebMeasure` -- a one-interval density
  ``rho(c + r s) = sqrt(1 - s^2) * sum_n b_n U_n(s)`` whose Cauchy transform
  and complex log potential are finite sums in ``1/phi(s)``,
  ``phi(s) = s + sqrt(s - 1) sqrt(s + 1)``.

Complex evaluation points may carry a signed zero imaginary part; it selects
the boundary value from above (``+0.0``) or below (``-0.0``) on the real axis.
"""
from __future__ import annotations

import numpy as np

_PI = np.pi


def _xlogabs(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] * np.log(np.abs(u[nz]))
    return out


def G1(u):
    """Antiderivative of log|u| vanishing at 0."""
    u = np.asarray(u, dtype=float)
    return _xlogabs(u) - u


def G2(u):
    """Second antiderivative of log|u| vanishing at 0."""
    u = np.asarray(u, dtype=float)
    return 0.5 * u * _xlogabs(u) - 0.75 * u * u


def _clog_antider(u):
    """u log u - u on complex u with H(0) = 0 (principal log)."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] * np.log(u[nz]) - u[nz]
    return out


def cell_log_matrix(e1, e2):
    """Cell averages of log(1/|x - y|) for x in cells of ``e1`` and y in cells of ``e2``."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    D = G2(e1[:, None] - e2[None, :])
    dd = D[1:, :-1] - D[:-1, :-1] - D[1:, 1:] + D[:-1, 1:]
    h1 = np.diff(e1)
    h2 = np.diff(e2)
    return -dd / np.outer(h1, h2)


def interval_log_energy(a, b, c, d):
    """Double integral of log(1/|x - y|) over [a, b] x [c, d]."""
    return -float(G2(b - c) - G2(a - c) - G2(b - d) + G2(a - d))


class GridMeasure:
    """Piecewise-constant density: ``weights[m]`` is the mass of cell ``[edges[m], edges[m+1]]``."""

    kind = "grid"

    def __init__(self, edges, weights):
        self.edges = np.asarray(edges, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if self.edges.ndim != 1 or self.edges.size != self.weights.size + 1:
            raise ValueError("need len(edges) == len(weights) + 1")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("grid edges must be strictly increasing")

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def midpoints(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def cell_density(self):
        return self.weights / self.widths

    @property
    def mass(self):
        return float(self.weights.sum())

    def _jumps(self):
        rho = self.cell_density
        return np.diff(np.concatenate([[0.0], rho, [0.0]]))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.weights.size)
        out = np.zeros_like(x)
        out[inside] = self.cell_density[idx[inside]]
        return out

    def potential(self, x):
        """U(x) = int log(1/|x - y|) dmu(y) for real x."""
        x = np.asarray(x, dtype=float)
        # -sum_m rho_m (G1(x - e_m) - G1(x - e_{m+1})) telescoped over edges
        jumps = self._jumps()
        return -(G1(x[..., None] - self.edges) @ jumps)

    def logpot(self, z):
        """int log(z - y) dmu(y) with the principal branch of the log."""
        z = np.asarray(z, dtype=complex)
        jumps = self._jumps()
        return _clog_antider(z[..., None] - self.edges) @ jumps

    def cauchy(self, z):
        """F(z) = int dmu(y) / (z - y); real z uses the sign of its zero imaginary part."""
        z = np.asarray(z, dtype=complex)
        jumps = self._jumps()
        return np.log(z[..., None] - self.edges) @ jumps

    def cell_potential(self, other_edges):
        """Cell averages of U over the cells of ``other_edges``."""
        return cell_log_matrix(other_edges, self.edges) @ self.weights


class ChebMeasure:
    """Square-root-vanishing density on ``[center - radius, center + radius]``."""

    kind = "cheb"

    def __init__(self, center, radius, coeffs):
        self.center = float(center)
        self.radius = float(radius)
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def support(self):
        return self.center - self.radius, self.center + self.radius

    @property
    def mass(self):
        return float(self.radius * _PI / 2 * self.coeffs[0])

    def _s(self, z):
        # scale parts separately: complex division would lose a signed zero
        z = np.asarray(z, dtype=complex)
        s = np.empty_like(z)
        s.real = (z.real - self.center) / self.radius
        s.imag = z.imag / self.radius
        return s

    @staticmethod
    def _phi(s):
        sp = s.copy()
        sm = s.copy()
        sp.real += 1.0
        sm.real -= 1.0
        return s + np.sqrt(sm) * np.sqrt(sp)

    def density(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.radius
        inside = np.abs(s) < 1.0
        theta = np.arccos(np.clip(s, -1.0, 1.0))
        n = np.arange(1, self.coeffs.size + 1)
        vals = np.sin(np.multiply.outer(theta, n)) @ self.coeffs
        return np.where(inside, vals, 0.0)

    def density_factor(self, s):
        """sum_n b_n U_n(s) on [-1, 1]; positive iff the density is."""
        s = np.asarray(s, dtype=float)
        # Clenshaw for the second-kind series
        b1 = np.zeros_like(s)
        b2 = np.zeros_like(s)
        for c in self.coeffs[::-1]:
            b1, b2 = c + 2 * s * b1 - b2, b1
        return b1

    def cauchy(self, z):
        w = 1.0 / self._phi(self._s(z))
        return _PI * w * np.polynomial.polynomial.polyval(w, self.coeffs)

    def logpot(self, z):
        s = self._s(z)
        phi = self._phi(s)
        w = 1.0 / phi
        b = self.coeffs
        total = b[0] * (_PI / 2) * (np.log(phi) - np.log(2.0) + 0.5 * w * w)
        if b.size > 1:
            n = np.arange(1, b.size)
            # sum_n b_n (pi/2) (w^{n+2}/(n+2) - w^n/n)
            ca = np.concatenate([[0.0], b[1:] / n])
            cb = np.concatenate([[0.0, 0.0, 0.0], b[1:] / (n + 2)])
            total = total + (_PI / 2) * (np.polynomial.polynomial.polyval(w, cb)
                                         - np.polynomial.polynomial.polyval(w, ca))
        return self.mass * np.log(self.radius) + self.radius * total

    def potential(self, x):
        return -np.real(self.logpot(np.asarray(x, dtype=float) + 0j))

    def quadrature(self, npts=None):
        """Nodes and weights integrating smooth f against this measure."""
        npts = npts or max(64, 2 * self.coeffs.size)
        k = np.arange(1, npts + 1)
        theta = k * _PI / (npts + 1)
        s = np.cos(theta)
        # Gauss-Chebyshev of the second kind: int sqrt(1-s^2) g(s) ds
        w2 = _PI / (npts + 1) * np.sin(theta) ** 2
        h = self.density_factor(s)
        return self.center + self.radius * s, self.radius * w2 * h


def on_side(x, side):
    """Real points as complex numbers with a signed zero imaginary part (side = +1 or -1)."""
    z = np.asarray(x, dtype=float) + 0j
    return z if side > 0 else np.conj(z)


def support_of(measure, threshold=1e-6):
    """(alpha, beta) of a measure; for grids, cells above ``threshold * max density``."""
    if measure.kind == "cheb":
        return measure.support
    rho = measure.cell_density
    if rho.max() <= 0:
        return None
    on = np.nonzero(rho > threshold * rho.max())[0]
    return float(measure.edges[on[0]]), float(measure.edges[on[-1] + 1])
