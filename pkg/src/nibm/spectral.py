"""Cauchy transforms, xi- and lambda-functions on the p+q sheets.

Sheet ``k`` (``0 <= k < p``) belongs to the starting point ``a_k`` and carries
the cuts of the components with ``k(i) = k``; sheet ``p + l`` belongs to
``b_l`` and carries the cuts with ``l(i) = l``::

    xi_k     = -sum_{k(i)=k} F_i(z) + (z - a_k) / (T t)
    xi_{p+l} =  sum_{l(i)=l} F_i(z) - (z - b_l) / (T (1 - t))

    lambda_k     =  sum_{k(i)=k} int log(1/(z - x)) dmu_i + (z - a_k)^2 / (2 T t) + ct_k
    lambda_{p+l} = -sum_{l(i)=l} int log(1/(z - x)) dmu_i - (z - b_l)^2 / (2 T (1 - t)) + ct_{p+l}

Real points on a cut need a side: pass ``side=+1`` (from above) or ``-1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .equilibrium import EquilibriumSolution
from .errors import ContourIntersectsSupport, OnCutWithoutSide, ResolutionTooCoarse, SingularTreeSystem
from .graph import leaf_peel_order
from .measures import on_side

_CHUNK = 20000


def _prepare(z, side, supports):
    """Complex evaluation points; validates real points inside a support."""
    z = np.asarray(z)
    if side is not None:
        if np.iscomplexobj(z) and np.any(z.imag != 0):
            raise ValueError("side is only meaningful for real points")
        return on_side(np.real(z), side)
    z = z.astype(complex)
    real = z.imag == 0
    if np.any(real):
        x = z.real[real]
        for a_, b_ in supports:
            if np.isfinite(a_) and np.any((x > a_) & (x < b_)):
                raise OnCutWithoutSide("real point inside a support needs side=+1 or side=-1")
    return z


def _chunked(fn, z):
    flat = z.ravel()
    if flat.size <= _CHUNK:
        return fn(flat).reshape(z.shape)
    out = np.empty(flat.shape, dtype=complex)
    for s in range(0, flat.size, _CHUNK):
        out[s:s + _CHUNK] = fn(flat[s:s + _CHUNK])
    return out.reshape(z.shape)


def cauchy_transform(measure, z, side=None, support=None):
    """F(z) = int dmu(x) / (z - x)."""
    if support is None:
        support = [_measure_support(measure)]
    zz = _prepare(z, side, support)
    return _chunked(measure.cauchy, zz)


def _measure_support(m):
    if m.kind == "cheb":
        return m.support
    on = np.nonzero(m.weights > 0)[0]
    return (m.edges[on[0]], m.edges[on[-1] + 1]) if on.size else (np.nan, np.nan)


@dataclass
class ContourResult:
    sheet: int
    component: int
    value: complex
    expected: complex

    @property
    def error(self):
        return abs(self.value - self.expected)


@dataclass
class LensReport:
    step: int  # the pair (step, step + 1)
    kind: str  # "vertical" (shared b-vertex) or "horizontal" (shared a-vertex)
    alpha_in_plus: bool
    beta_in_minus: bool
    n_unbounded_plus: int
    n_unbounded_minus: int
    re: np.ndarray
    im: np.ndarray
    field: np.ndarray
    labels: np.ndarray  # signed component ids: +id for positive regions, -id for negative

    @property
    def feasible(self):
        return self.alpha_in_plus and self.beta_in_minus

    @property
    def unique(self):
        return self.n_unbounded_plus == 1 and self.n_unbounded_minus == 1


class SpectralContext:
    """Evaluation of F_i, xi_j, lambda_j for a solved equilibrium problem."""

    def __init__(self, sol: EquilibriumSolution, peel_order=None):
        self.sol = sol
        self.tree = sol.tree
        self.cfg = sol.config
        self.p, self.q = self.tree.p, self.tree.q
        self.M = self.tree.n_edges
        self.masses = sol.fields.masses
        self.sheet_edges = [self.tree.edges_at(j) for j in range(self.p + self.q)]
        self.peel_order = list(peel_order) if peel_order is not None else leaf_peel_order(self.tree)
        self.ctilde = np.zeros(self.p + self.q)
        self.ctilde = self.solve_lambda_constants()

    # -- basic transforms ---------------------------------------------------
    @property
    def supports(self):
        return self.sol.supports

    def sheet_mass(self, j):
        return float(sum(self.masses[i] for i in self.sheet_edges[j]))

    def _apply(self, i, method, zz):
        m = self.sol.measures[i]
        if m is None:
            return np.zeros(zz.shape, dtype=complex)
        return _chunked(getattr(m, method), zz)

    def cauchy(self, i, z, side=None):
        return self._apply(i, "cauchy", _prepare(z, side, self.supports))

    def logpot(self, i, z, side=None):
        """int log(z - x) dmu_i(x), principal branch."""
        return self._apply(i, "logpot", _prepare(z, side, self.supports))

    def _poly(self, j, z):
        T, t = self.cfg.T, self.cfg.t
        if j < self.p:
            return (z - self.cfg.a[j]) / (T * t)
        return -(z - self.cfg.b[j - self.p]) / (T * (1 - t))

    def _quad(self, j, z):
        T, t = self.cfg.T, self.cfg.t
        if j < self.p:
            return (z - self.cfg.a[j]) ** 2 / (2 * T * t)
        return -(z - self.cfg.b[j - self.p]) ** 2 / (2 * T * (1 - t))

    def _sign(self, j):
        return -1.0 if j < self.p else 1.0

    def xi(self, j, z, side=None):
        zz = _prepare(z, side, self.supports)
        out = self._poly(j, zz)
        for i in self.sheet_edges[j]:
            out = out + self._sign(j) * self._apply(i, "cauchy", zz)
        return out

    def lam_raw(self, j, z, side=None):
        zz = _prepare(z, side, self.supports)
        out = self._quad(j, zz)
        # log(1/(z-x)) = -log(z-x): sheet k gets -logpot, sheet p+l gets +logpot
        for i in self.sheet_edges[j]:
            out = out + self._sign(j) * self._apply(i, "logpot", zz)
        return out

    def lam(self, j, z, side=None):
        return self.lam_raw(j, z, side) + self.ctilde[j]

    # -- constants ------------------------------------------------------------
    def solve_lambda_constants(self):
        """ct_{k(i)} - ct_{p+l(i)} = Re(lamraw_{p+l(i)} - lamraw_{k(i)})(beta_i); root constant 0."""
        V = self.p + self.q
        d = np.zeros(self.M)
        for i in range(self.M):
            if self.sol.measures[i] is None:
                # a zero-mass edge still links its vertices; use the gap-free condition at the center
                x = np.array([self.sol.fields.centers[i]])
            else:
                x = np.array([self.supports[i][1]])
            k, pl = self.tree.endpoints(i)
            d[i] = float(np.real(self.lam_raw(pl, x, side=1) - self.lam_raw(k, x, side=1))[0])
        ct = np.full(V, np.nan)
        order = self.peel_order
        ct[order[-1]] = 0.0
        for v in reversed(order[:-1]):
            done = [i for i in self.tree.edges_at(v)
                    if np.isfinite(ct[self._other(i, v)])]
            if len(done) != 1:
                raise SingularTreeSystem(f"vertex {v} attaches to {len(done)} solved vertices")
            i = done[0]
            u = self._other(i, v)
            ct[v] = ct[u] + d[i] if v < self.p else ct[u] - d[i]
        if not np.all(np.isfinite(ct)):
            raise SingularTreeSystem("peel order does not reach every vertex")
        return ct

    def _other(self, i, v):
        k, pl = self.tree.endpoints(i)
        return pl if v == k else k

    def base_constants(self):
        """c_j = lambda_j(beta_{i_j}), i_j the first edge on sheet j (its rightmost cut)."""
        out = np.zeros(self.p + self.q)
        for j in range(self.p + self.q):
            i = self.sheet_edges[j][0]
            x = np.array([self.supports[i][1]])
            out[j] = float(np.real(self.lam(j, x, side=1))[0])
        return out

    def constant_residuals(self):
        res = []
        for i in range(self.M):
            if self.sol.measures[i] is None:
                continue
            k, pl = self.tree.endpoints(i)
            x = np.array([self.supports[i][1]])
            res.append(float(abs(np.real(self.lam(k, x, 1) - self.lam(pl, x, 1))[0])))
        return np.array(res)

    # -- checks ---------------------------------------------------------------
    def interior_points(self, i, n=200, margin=0.02):
        a_, b_ = self.supports[i]
        theta = np.linspace(margin * np.pi, (1 - margin) * np.pi, n)
        return 0.5 * (a_ + b_) - 0.5 * (b_ - a_) * np.cos(theta)

    def gluing_residual(self, i, n=200):
        """max |xi_{k(i),+} - xi_{p+l(i),-}| and the mirrored pair on the interior of cut i."""
        x = self.interior_points(i, n)
        k, pl = self.tree.endpoints(i)
        r1 = np.abs(self.xi(k, x, 1) - self.xi(pl, x, -1))
        r2 = np.abs(self.xi(k, x, -1) - self.xi(pl, x, 1))
        return float(max(r1.max(), r2.max()))

    def xi_scale(self, i, n=200):
        """Magnitude of the xi values compared in :meth:`gluing_residual`."""
        x = self.interior_points(i, n)
        k, pl = self.tree.endpoints(i)
        return float(max(np.abs(self.xi(k, x, 1)).max(), np.abs(self.xi(pl, x, 1)).max()))

    def sum_rule_residual(self, n=200):
        worst = 0.0
        for i in range(self.M):
            if self.sol.measures[i] is None:
                continue
            x = self.interior_points(i, n)
            up = sum(self.xi(j, x, 1) for j in range(self.p + self.q))
            dn = sum(self.xi(j, x, -1) for j in range(self.p + self.q))
            worst = max(worst, float(np.abs(up - dn).max()))
        return worst

    def density_identity_residual(self, i, n=200):
        x = self.interior_points(i, n)
        k, _ = self.tree.endpoints(i)
        return float(np.max(np.abs(np.imag(self.xi(k, x, 1)) / np.pi - self.sol.density(i, x))))

    def contour_rectangle(self, i, margin=None):
        a_, b_ = self.supports[i]
        others = [s for j, s in enumerate(self.supports) if j != i and np.all(np.isfinite(s))]
        if margin is None:
            gaps = [a_ - s[1] for s in others if s[1] < a_] + [s[0] - b_ for s in others if s[0] > b_]
            margin = 0.5 * min(gaps) if gaps else 0.5 * (b_ - a_)
            margin = min(margin, 0.5 * (b_ - a_))
        lo, hi = a_ - margin, b_ + margin
        for s in others:
            if s[0] <= hi and lo <= s[1]:
                raise ContourIntersectsSupport(f"contour around cut {i + 1} meets another support")
        return lo, hi, margin

    def contour_integral_xi(self, j, i, margin=None, panels=8, order=32):
        """Counterclockwise integral of xi_j around a rectangle enclosing cut i only."""
        lo, hi, h = self.contour_rectangle(i, margin)
        corners = [complex(lo, -h), complex(hi, -h), complex(hi, h), complex(lo, h), complex(lo, -h)]
        gx, gw = np.polynomial.legendre.leggauss(order)
        total = 0.0 + 0.0j
        for z0, z1 in zip(corners[:-1], corners[1:]):
            npan = max(panels, int(np.ceil(abs(z1 - z0) / h)) * 2)
            edges = np.linspace(0, 1, npan + 1)
            for u0, u1 in zip(edges[:-1], edges[1:]):
                u = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * gx
                z = z0 + (z1 - z0) * u
                total += np.sum(gw * self.xi(j, z)) * 0.5 * (u1 - u0) * (z1 - z0)
        k, pl = self.tree.endpoints(i)
        mass = self.masses[i]
        expected = -2j * np.pi * mass if j == k else (2j * np.pi * mass if j == pl else 0j)
        return ContourResult(j, i, complex(total), expected)

    def all_contours(self):
        return [self.contour_integral_xi(j, i) for i in range(self.M) if self.sol.measures[i] is not None
                for j in range(self.p + self.q)]

    def xi_asymptotic_remainder(self, j, R):
        """|xi_j(z) - poly_j(z) -/+ mass_j / z| at |z| = R along a few directions."""
        z = R * np.exp(1j * np.array([0.3, 1.1, 2.0, 2.9, 4.0, 5.3]))
        rem = self.xi(j, z) - self._poly(j, z) - self._sign(j) * self.sheet_mass(j) / z
        return float(np.max(np.abs(rem)))

    def lambda_difference_on_line(self, x, side=1):
        """Re(lambda_{k(i)} - lambda_{p+l(i)}) on real points, per edge."""
        out = []
        for i in range(self.M):
            k, pl = self.tree.endpoints(i)
            out.append(np.real(self.lam(k, x, side) - self.lam(pl, x, side)))
        return np.array(out)

    def X0(self, n=4001):
        """Smallest |x| beyond which every Re(lambda_k - lambda_{p+l}) is positive on the real line."""
        lo, hi = self.sol.window()
        span = hi - lo
        R = max(abs(lo), abs(hi)) + 4 * span
        x = np.linspace(-R, R, n)
        worst = np.full(n, np.inf)
        for k in range(self.p):
            for l in range(self.q):
                d = np.real(self.lam(k, x, 1) - self.lam(self.p + l, x, 1))
                worst = np.minimum(worst, d)
        bad = np.abs(x[worst <= 0])
        return float(bad.max()) if bad.size else 0.0

    # -- lens feasibility -----------------------------------------------------
    def step_field(self, i, z):
        """Sign field for the step between edges i and i+1."""
        e0, e1 = self.tree.edges[i], self.tree.edges[i + 1]
        if e1.k == e0.k + 1:
            return "vertical", np.real(self.lam(e1.k, z) - self.lam(e0.k, z))
        p = self.p
        return "horizontal", np.real(self.lam(p + e0.l, z) - self.lam(p + e1.l, z))

    def lens_grid(self, nx=600, ny=400, margin_factor=2.0):
        lo, hi = self.sol.window()
        span = hi - lo
        m = margin_factor * span
        re = np.linspace(lo - m, hi + m, nx)
        im = np.linspace(-m, m, ny)
        return re, im

    def lens_feasibility(self, i, nx=600, ny=400, margin_factor=2.0):
        if not 0 <= i < self.M - 1:
            raise ValueError("step index must pick two consecutive edges")
        re, im = self.lens_grid(nx, ny, margin_factor)
        Z = re[None, :] + 1j * im[:, None]
        kind, F = self.step_field(i, Z)
        pos = F > 0
        neg = F < 0
        lp, npos = scipy.ndimage.label(pos)
        ln, nneg = scipy.ndimage.label(neg)
        labels = lp - ln

        def boundary_ids(lab):
            ids = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])))
            ids.discard(0)
            return ids

        up, un = boundary_ids(lp), boundary_ids(ln)

        def locate(x):
            ix = int(np.argmin(np.abs(re - x)))
            iy = int(np.argmin(np.abs(im)))
            win = F[max(iy - 1, 0):iy + 2, max(ix - 1, 0):ix + 2]
            if not (np.all(win > 0) or np.all(win < 0)):
                raise ResolutionTooCoarse(f"sign change within one cell of x = {x:.6g}")
            return lp[iy, ix], ln[iy, ix]

        a_pos, _ = locate(self.supports[i][0])
        _, b_neg = locate(self.supports[i + 1][1])
        return LensReport(i, kind, bool(a_pos in up), bool(b_neg in un), len(up), len(un),
                          re, im, F, labels)
