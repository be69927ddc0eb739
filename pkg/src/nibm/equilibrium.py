"""Numerical solution of the graph-indexed vector equilibrium problem.

Component ``i`` of the unknown is a positive measure of mass ``t_{k(i),l(i)}``
in the field ``V_i(x) = (x - x_i(t))^2 / (2 t (1 - t))`` at temperature ``T``.
The energy is ``sum_ij a_ij I(mu_i, mu_j) + (1/T) sum_i int V_i dmu_i``.

Pipeline used by :func:`solve_equilibrium`:

1. piecewise-constant grid QP (accelerated projected gradient with a
   per-component simplex projection, finished by an active-set KKT solve),
2. one re-grid to 1.5x the detected supports,
3. when the supports are disjoint, a Gauss-Seidel sweep of one-interval
   solves in the effective fields (:func:`refine_one_cut`).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.optimize

from .errors import InsufficientResolution, MaxIterationsExceeded, SupportSplitDetected
from .graph import PathTree, ProblemConfig, interaction_matrix
from .measures import ChebMeasure, GridMeasure, cell_log_matrix

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-6


class GridOverlapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ExternalFieldSet:
    centers: np.ndarray
    curvature: float  # 1 / (2 t (1 - t))
    T: float
    masses: np.ndarray

    @property
    def size(self):
        return self.centers.size

    def V(self, i, x):
        return self.curvature * (np.asarray(x) - self.centers[i]) ** 2

    def dV(self, i, x):
        return 2.0 * self.curvature * (np.asarray(x) - self.centers[i])

    def cell_average(self, i, edges):
        """(1/T) times the cell averages of V_i."""
        u = edges - self.centers[i]
        return self.curvature * np.diff(u ** 3) / (3.0 * np.diff(edges)) / self.T


def external_fields(cfg: ProblemConfig, tree: PathTree, masses=None) -> ExternalFieldSet:
    t = cfg.t
    a = np.asarray(cfg.a)
    b = np.asarray(cfg.b)
    centers = np.array([(1 - t) * a[e.k] + t * b[e.l] for e in tree.edges])
    if masses is None:
        masses = tree.masses()
    return ExternalFieldSet(centers, 1.0 / (2 * t * (1 - t)), cfg.T, np.asarray(masses, dtype=float))


# ---------------------------------------------------------------------------
# discrete energy

@dataclass
class DiscreteEnergy:
    """E(w) = w^T Q w + c^T w over the stacked cell masses of all components."""

    grids: list  # edges per component, None for a zero-mass component
    blocks: dict  # (i, j) -> a_ij * cell_log_matrix
    c: list

    def __post_init__(self):
        sizes = [0 if g is None else g.size - 1 for g in self.grids]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])

    @property
    def size(self):
        return int(self.offsets[-1])

    def split(self, w):
        return [w[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.grids))]

    def Qmul(self, w):
        parts = self.split(w)
        out = np.zeros_like(w)
        for (i, j), blk in self.blocks.items():
            out[self.offsets[i]:self.offsets[i + 1]] += blk @ parts[j]
        return out

    def dense(self):
        Q = np.zeros((self.size, self.size))
        for (i, j), blk in self.blocks.items():
            Q[self.offsets[i]:self.offsets[i + 1], self.offsets[j]:self.offsets[j + 1]] = blk
        return Q

    @property
    def cvec(self):
        return np.concatenate([np.asarray(ci, dtype=float) for ci in self.c]) if self.c else np.zeros(0)

    def value(self, w):
        return float(w @ self.Qmul(w) + self.cvec @ w)

    def gradient(self, w):
        return 2.0 * self.Qmul(w) + self.cvec


def assemble_energy(fields: ExternalFieldSet, A, grids) -> DiscreteEnergy:
    """Quadratic form and linear term of the cell-discretized energy."""
    M = fields.size
    for g in grids:
        if g is None:
            continue
        if g.ndim != 1 or g.size < 2 or not np.all(np.isfinite(g)) or np.any(np.diff(g) <= 0):
            raise ValueError("grids must be finite and strictly increasing")
    blocks = {}
    for i in range(M):
        for j in range(i, M):
            if A[i, j] == 0 or grids[i] is None or grids[j] is None:
                continue
            blk = A[i, j] * cell_log_matrix(grids[i], grids[j])
            if i == j:
                blk = 0.5 * (blk + blk.T)
            else:
                lo = max(grids[i][0], grids[j][0])
                hi = min(grids[i][-1], grids[j][-1])
                if lo < hi:
                    warnings.warn(f"grids of interacting components {i + 1} and {j + 1} overlap",
                                  GridOverlapWarning, stacklevel=2)
                blocks[(j, i)] = blk.T
            blocks[(i, j)] = blk
    c = [np.zeros(0) if g is None else fields.cell_average(i, g) for i, g in enumerate(grids)]
    return DiscreteEnergy(list(grids), blocks, c)


# ---------------------------------------------------------------------------
# grid QP

def project_simplex(v, mass):
    """Euclidean projection of ``v`` onto {w >= 0, sum w = mass}."""
    if mass <= 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - mass
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    w = np.maximum(v - theta, 0.0)
    # mop up rounding so the mass is exact to the last bits
    s = w.sum()
    if s > 0:
        w *= mass / s
    return w


def _project(energy, w, masses):
    out = np.empty_like(w)
    for i in range(len(energy.grids)):
        sl = slice(energy.offsets[i], energy.offsets[i + 1])
        out[sl] = project_simplex(w[sl], masses[i])
    return out


def kkt_residual(energy, w):
    """Per-component (L, on-support spread, off-support violation) of the discrete KKT system."""
    g = energy.gradient(w)
    report = []
    for i in range(len(energy.grids)):
        sl = slice(energy.offsets[i], energy.offsets[i + 1])
        wi, gi = w[sl], g[sl]
        on = wi > 0
        if not on.any():
            report.append((-np.inf, 0.0, 0.0))
            continue
        L = float(np.median(gi[on]))
        spread = float(np.max(np.abs(gi[on] - L)))
        viol = float(max(0.0, -(gi[~on] - L).min())) if (~on).any() else 0.0
        report.append((L, spread, viol))
    return report


def _kkt_max(report):
    return max((max(s, v) for _, s, v in report), default=0.0)


def _lipschitz(energy, rng_seed=0):
    """Largest eigenvalue of the Hessian restricted to zero-mass directions."""
    n = energy.size

    def proj0(v):
        out = v.copy()
        for i in range(len(energy.grids)):
            sl = slice(energy.offsets[i], energy.offsets[i + 1])
            if out[sl].size:
                out[sl] -= out[sl].mean()
        return out

    v = proj0(np.random.default_rng(rng_seed).standard_normal(n))
    lam = 0.0
    for _ in range(60):
        v /= np.linalg.norm(v)
        wv = proj0(2.0 * energy.Qmul(v))
        new = float(v @ wv)
        v = wv
        if abs(new - lam) < 1e-6 * abs(new):
            lam = new
            break
        lam = new
    return 1.05 * lam


def _active_set_polish(energy, w, masses, tol, max_rounds=40):
    """Solve the KKT system on a guessed support, adjusting it primal-dually."""
    M = len(energy.grids)
    comp = np.concatenate([np.full(energy.offsets[i + 1] - energy.offsets[i], i) for i in range(M)])
    active = w > 0
    c = energy.cvec
    Q = None
    for _ in range(max_rounds):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            return None
        if Q is None:
            Q = energy.dense()
        live = [i for i in range(M) if masses[i] > 0]
        E = np.zeros((idx.size, M))
        E[np.arange(idx.size), comp[idx]] = 1.0
        E = E[:, live]
        # symmetric saddle-point form; the multiplier block solves for -L
        K = np.block([[2.0 * Q[np.ix_(idx, idx)], E], [E.T, np.zeros((len(live), len(live)))]])
        rhs = np.concatenate([-c[idx], np.asarray(masses)[live]])
        try:
            sol = scipy.linalg.solve(K, rhs, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
            return None
        ws = sol[:idx.size]
        Ls = np.full(M, -np.inf)
        Ls[live] = -sol[idx.size:]
        if np.any(ws < 0):
            drop = idx[ws < 0]
            active[drop] = False
            continue
        wn = np.zeros_like(w)
        wn[idx] = ws
        g = 2.0 * (Q @ wn) + c
        slack = g - Ls[comp]
        add = (~active) & (slack < -0.1 * tol) & np.isfinite(Ls[comp])
        if add.any():
            active |= add
            continue
        return wn
    return None


@dataclass
class QPResult:
    weights: np.ndarray
    energy: float
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def solve_grid_qp(energy: DiscreteEnergy, masses, tol=1e-6, max_iter=100_000, w0=None,
                  polish_every=50) -> QPResult:
    """Minimize the discrete energy over per-component scaled simplices.

    Monotone FISTA iterations (never increase the energy); every
    ``polish_every`` steps an active-set KKT solve on the current support is
    tried and kept when it is feasible and lowers the energy.
    """
    masses = np.asarray(masses, dtype=float)
    if np.any(masses < 0):
        raise ValueError("masses must be nonnegative")
    n = energy.size
    if w0 is None:
        w0 = np.concatenate([np.full(energy.offsets[i + 1] - energy.offsets[i],
                                     masses[i] / max(1, energy.offsets[i + 1] - energy.offsets[i]))
                             for i in range(len(energy.grids))])
    x = _project(energy, np.asarray(w0, dtype=float), masses)
    fx = energy.value(x)
    history = [fx]
    if n == 0:
        return QPResult(x, fx, 0.0, 0, True, history)
    Lip = _lipschitz(energy)
    y, tk = x.copy(), 1.0
    res = _kkt_max(kkt_residual(energy, x))
    it = 0
    while it < max_iter:
        if res <= tol:
            return QPResult(x, fx, res, it, True, history)
        it += 1
        z = _project(energy, y - energy.gradient(y) / Lip, masses)
        fz = energy.value(z)
        tn = 0.5 * (1 + np.sqrt(1 + 4 * tk * tk))
        x_old = x
        if fz <= fx:
            x, fx = z, fz
        y = x + (tk / tn) * (z - x) + ((tk - 1) / tn) * (x - x_old)
        tk = tn
        history.append(fx)
        if it % polish_every == 0:
            wp = _active_set_polish(energy, x, masses, tol)
            if wp is not None:
                fp = energy.value(wp)
                if fp <= fx + 1e-14 * max(1.0, abs(fx)):
                    x, fx = wp, min(fp, fx)
                    y, tk = x.copy(), 1.0
                    history.append(fx)
        res = _kkt_max(kkt_residual(energy, x))
    if res <= tol:
        return QPResult(x, fx, res, it, True, history)
    return QPResult(x, fx, res, it, False, history)


# ---------------------------------------------------------------------------
# support detection

def detect_support(measure: GridMeasure, threshold=SUPPORT_THRESHOLD):
    """Support endpoints from the square-root edge model.

    Cells above ``threshold`` times the peak density define the support; each
    endpoint is then refined by fitting rho^2 linearly against x over a few
    interior cells next to the edge (the edge cell itself is partially filled).
    Returns ``(alpha, beta, first_cell, last_cell)``.
    """
    rho = measure.cell_density
    if rho.max() <= 0:
        return np.nan, np.nan, -1, -1
    on = np.nonzero(rho > threshold * rho.max())[0]
    lo, hi = int(on[0]), int(on[-1])
    alpha, beta = measure.edges[lo], measure.edges[hi + 1]
    mids = measure.midpoints
    if hi - lo >= 16:
        for side in ("left", "right"):
            sel = np.arange(lo + 1, lo + 7) if side == "left" else np.arange(hi - 6, hi)
            slope, icpt = np.polyfit(mids[sel], rho[sel] ** 2, 1)
            if slope == 0:
                continue
            root = -icpt / slope
            if side == "left" and measure.edges[lo] - measure.widths[lo] <= root <= measure.edges[lo + 1]:
                alpha = root
            if side == "right" and measure.edges[hi] <= root <= measure.edges[hi + 1] + measure.widths[hi]:
                beta = root
    return float(alpha), float(beta), lo, hi


# ---------------------------------------------------------------------------
# solution container

@dataclass
class EquilibriumSolution:
    config: ProblemConfig
    tree: PathTree
    fields: ExternalFieldSet
    A: np.ndarray
    measures: list  # GridMeasure | ChebMeasure | None per component
    grid_measures: list  # the grid QP result, kept for cross-checks
    supports: np.ndarray  # (M, 2), nan for zero-mass components
    constants: np.ndarray
    residual: float
    energy: float
    converged: bool
    iterations: int
    method: str = "grid"
    energy_history: list = field(default_factory=list)
    grid_cells: list = field(default_factory=list)  # support cell counts per component

    @property
    def disjoint(self) -> bool:
        live = [s for s in self.supports if np.all(np.isfinite(s))]
        return all(nxt[1] < cur[0] for cur, nxt in zip(live, live[1:]))

    def density(self, i, x):
        m = self.measures[i]
        return np.zeros_like(np.asarray(x, dtype=float)) if m is None else m.density(x)

    def effective_potential(self, i, x):
        """U_i(x) = 2 sum_j a_ij U^{mu_j}(x) + V_i(x)/T."""
        x = np.asarray(x, dtype=float)
        out = self.fields.V(i, x) / self.fields.T
        for j, mj in enumerate(self.measures):
            if mj is not None and self.A[i, j] != 0:
                out = out + 2.0 * self.A[i, j] * mj.potential(x)
        return out

    def window(self):
        live = self.supports[np.all(np.isfinite(self.supports), axis=1)]
        lo, hi = live[:, 0].min(), live[:, 1].max()
        return lo, hi


def _grid_for(center, halfwidth, ncells):
    return np.linspace(center - halfwidth, center + halfwidth, ncells + 1)


def _solve_on(fields, A, grids, tol, max_iter, w0=None):
    energy = assemble_energy(fields, A, grids)
    return energy, solve_grid_qp(energy, fields.masses, tol=tol, max_iter=max_iter, w0=w0)


def _measures_from(energy, w):
    out = []
    for g, wi in zip(energy.grids, energy.split(w)):
        out.append(None if g is None else GridMeasure(g, wi))
    return out


def solve_equilibrium(cfg: ProblemConfig, tree: PathTree, grid=2000, tol=1e-6, max_iter=100_000,
                      refine=True, masses=None, init_cells=512, refine_tol=1e-11):
    """Solve the vector equilibrium problem; see the module docstring."""
    if grid < 8:
        raise ValueError("grid must have at least 8 cells")
    A, _ = interaction_matrix(tree)
    fields = external_fields(cfg, tree, masses)
    M = fields.size
    width = np.sqrt(cfg.T * cfg.t * (1 - cfg.t))
    halfw = np.full(M, 3.0 * width)
    live = fields.masses > 0

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridOverlapWarning)
        for _ in range(12):
            grids = [_grid_for(fields.centers[i], halfw[i], init_cells) if live[i] else None for i in range(M)]
            energy, qp = _solve_on(fields, A, grids, tol, max_iter)
            touching = []
            for i, mi in enumerate(_measures_from(energy, qp.weights)):
                if mi is None:
                    continue
                rho = mi.cell_density
                thr = SUPPORT_THRESHOLD * rho.max()
                if rho[0] > thr or rho[-1] > thr:
                    touching.append(i)
            if not touching:
                break
            halfw[touching] *= 2.0
        history = list(qp.history)

        # re-grid to 1.5x the detected supports
        first = _measures_from(energy, qp.weights)
        grids = []
        for i, mi in enumerate(first):
            if mi is None:
                grids.append(None)
                continue
            a_, b_, _, _ = detect_support(mi)
            c0, h0 = 0.5 * (a_ + b_), 0.75 * (b_ - a_)
            grids.append(_grid_for(c0, h0, grid))
        w0 = np.concatenate([
            np.zeros(0) if g is None else first[i].density(0.5 * (g[1:] + g[:-1])) * np.diff(g)
            for i, g in enumerate(grids)])
    energy = assemble_energy(fields, A, grids)
    qp = solve_grid_qp(energy, fields.masses, tol=tol, max_iter=max_iter, w0=w0)
    history += qp.history
    gms = _measures_from(energy, qp.weights)
    supports = np.full((M, 2), np.nan)
    cells = []
    for i, mi in enumerate(gms):
        if mi is None:
            cells.append(0)
            continue
        a_, b_, lo, hi = detect_support(mi)
        supports[i] = a_, b_
        cells.append(hi - lo + 1)
    consts = np.array([L for L, _, _ in kkt_residual(energy, qp.weights)])
    sol = EquilibriumSolution(cfg, tree, fields, A, list(gms), list(gms), supports, consts, qp.residual,
                              qp.energy, qp.converged, qp.iterations, "grid", history, cells)
    if not qp.converged:
        raise MaxIterationsExceeded(
            f"grid QP stopped after {qp.iterations} iterations with KKT residual {qp.residual:.3e}",
            solution=sol)
    if refine and sol.disjoint:
        try:
            sol = refine_one_cut(sol, tol=refine_tol)
        except SupportSplitDetected as exc:
            log.info("one-cut refinement abandoned: %s", exc)
    return sol


# ---------------------------------------------------------------------------
# one-interval refinement

N_CHEB = 128


def _effective_dfield(sol, i, measures, x):
    """Derivative of V_i/T + 2 sum_{j != i} a_ij U^{mu_j} at real x."""
    out = sol.fields.dV(i, x) / sol.fields.T
    for j, mj in enumerate(measures):
        if j == i or mj is None or sol.A[i, j] == 0:
            continue
        out = out - 2.0 * sol.A[i, j] * np.real(mj.cauchy(x + 0j))
    return out


def _cheb_coeffs(vals):
    """Chebyshev-T coefficients from values at first-kind nodes cos(pi (k + 1/2) / N)."""
    g = scipy.fft.dct(vals, type=2) / vals.size
    g[0] *= 0.5
    return g


def _one_cut(sol, i, measures, guess):
    mass = sol.fields.masses[i]
    N = N_CHEB
    s = np.cos(np.pi * (np.arange(N) + 0.5) / N)

    def coeffs(params):
        c, u = params
        r = np.exp(u)
        return _cheb_coeffs(0.5 * _effective_dfield(sol, i, measures, c + r * s)), r

    def resid(params):
        g, r = coeffs(params)
        return [g[0], (r * g[1] / 2 - mass)]

    c0, r0 = 0.5 * (guess[0] + guess[1]), 0.5 * (guess[1] - guess[0])
    out = scipy.optimize.root(resid, [c0, np.log(r0)], method="hybr", options={"xtol": 1e-14})
    if not out.success and np.max(np.abs(resid(out.x))) > 1e-12:
        raise SupportSplitDetected(f"component {i + 1}: endpoint equations did not converge ({out.message})")
    g, r = coeffs(out.x)
    c = out.x[0]
    meas = ChebMeasure(c, r, g[1:] / np.pi)
    # effective field must be convex on the interval, density positive inside
    xs = c + r * np.linspace(-1, 1, 257)
    if np.any(np.diff(_effective_dfield(sol, i, measures, xs)) <= 0):
        raise SupportSplitDetected(f"component {i + 1}: effective field not convex on [{xs[0]:.6g}, {xs[-1]:.6g}]")
    h = meas.density_factor(np.linspace(-1, 1, 401))
    if np.any(h[1:-1] <= 0) or h.min() < -1e-9 * np.abs(h).max():
        raise SupportSplitDetected(f"component {i + 1}: density changes sign on the one-cut candidate")
    return meas


def refine_one_cut(sol: EquilibriumSolution, tol=1e-11, max_sweeps=200) -> EquilibriumSolution:
    """Cyclic one-interval re-solve of each component in its effective field."""
    if not sol.disjoint:
        raise SupportSplitDetected("supports are not disjoint single intervals")
    measures = list(sol.measures)
    supports = sol.supports.copy()
    M = len(measures)
    move = np.inf
    sweeps = 0
    while move >= tol and sweeps < max_sweeps:
        sweeps += 1
        move = 0.0
        for i in range(M):
            if measures[i] is None:
                continue
            meas = _one_cut(sol, i, measures, supports[i])
            new = np.array(meas.support)
            for j in range(M):
                if j != i and np.all(np.isfinite(supports[j])):
                    if new[0] <= supports[j][1] and supports[j][0] <= new[1]:
                        raise SupportSplitDetected(f"components {i + 1} and {j + 1} overlap after refinement")
            move = max(move, float(np.max(np.abs(new - supports[i]))))
            supports[i] = new
            measures[i] = meas
    if move >= tol:
        raise SupportSplitDetected(f"one-cut sweeps did not settle (last move {move:.2e})")
    out = replace(sol, measures=measures, supports=supports, method="one-cut")
    rep = el_residual(out)
    out.constants = np.array([r.L for r in rep])
    out.residual = max(r.on_support for r in rep)
    out.energy = measure_energy(out)
    return out


def measure_energy(sol: EquilibriumSolution) -> float:
    """E(mu) evaluated by quadrature against each component."""
    total = 0.0
    for i, mi in enumerate(sol.measures):
        if mi is None:
            continue
        if mi.kind == "cheb":
            x, w = mi.quadrature()
        else:
            x, w = mi.midpoints, mi.weights
        total += np.sum(w * sol.fields.V(i, x)) / sol.fields.T
        for j, mj in enumerate(sol.measures):
            if mj is None or sol.A[i, j] == 0:
                continue
            if mi.kind == "grid" and mj.kind == "grid":
                total += sol.A[i, j] * float(mi.weights @ mj.cell_potential(mi.edges))
            else:
                total += sol.A[i, j] * float(np.sum(w * mj.potential(x)))
    return float(total)


# ---------------------------------------------------------------------------
# diagnostics

@dataclass
class ELReport:
    component: int
    L: float
    on_support: float  # max |U_i - L_i| on the support
    scale: float  # field magnitude used for scaling
    off_support_min: float  # min (U_i - L_i) off the support
    gap_midpoint_min: float  # min (U_i - L_i) over gap midpoints
    trivial: bool = False

    @property
    def scaled(self):
        return self.on_support / self.scale


def _gap_midpoints(sol):
    live = [s for s in sol.supports if np.all(np.isfinite(s))]
    return np.array([0.5 * (nxt[1] + cur[0]) for cur, nxt in zip(live, live[1:]) if nxt[1] < cur[0]])


def el_residual(sol: EquilibriumSolution, npts=400):
    """Euler-Lagrange report per component on a verification grid."""
    lo, hi = sol.window()
    span = hi - lo
    outside = np.linspace(lo - span, hi + span, 8 * npts + 1)
    gaps = _gap_midpoints(sol)
    reports = []
    for i, mi in enumerate(sol.measures):
        if mi is None:
            reports.append(ELReport(i, -np.inf, 0.0, 1.0, np.inf, np.inf, trivial=True))
            continue
        a_, b_ = sol.supports[i]
        theta = np.linspace(0, np.pi, npts + 2)[1:-1]
        if mi.kind == "cheb":
            inside = 0.5 * (a_ + b_) + 0.5 * (b_ - a_) * np.cos(theta)
        else:
            # cell midpoints strictly inside the detected support, away from the edge cells
            mids = mi.midpoints
            inside = mids[(mids > a_ + 2 * mi.widths[0]) & (mids < b_ - 2 * mi.widths[0])]
        U = sol.effective_potential(i, inside)
        L = float(np.median(U))
        on = float(np.max(np.abs(U - L)))
        scale = max(1.0, float(np.max(np.abs(U))))
        off_pts = outside[(outside < a_) | (outside > b_)]
        off = float(np.min(sol.effective_potential(i, off_pts) - L)) if off_pts.size else np.inf
        gm = float(np.min(sol.effective_potential(i, gaps) - L)) if gaps.size else np.inf
        reports.append(ELReport(i, L, on, scale, off, gm))
    return reports


def edge_exponent_fit(sol: EquilibriumSolution, i, side, frac=0.1):
    """Fit rho_i ~ C d^e with d the distance to the chosen endpoint."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    mi = sol.measures[i]
    if mi is None or (sol.grid_cells and sol.grid_cells[i] < 32):
        raise InsufficientResolution(f"component {i + 1} has fewer than 32 support cells")
    a_, b_ = sol.supports[i]
    width = b_ - a_
    if mi.kind == "cheb":
        d = width * frac * np.linspace(0.02, 1.0, 64)
        x = a_ + d if side == "left" else b_ - d
        rho = mi.density(x)
    else:
        mids = mi.midpoints
        d = (mids - a_) if side == "left" else (b_ - mids)
        h = mi.widths[0]
        sel = (d > 1.5 * h) & (d < frac * width)
        if sel.sum() < 4:
            raise InsufficientResolution(f"component {i + 1}: too few cells near the {side} edge")
        d, rho = d[sel], mi.cell_density[sel]
    keep = rho > 0
    e, logc = np.polyfit(np.log(d[keep]), np.log(rho[keep]), 1)
    return float(e), float(np.exp(logc))


def support_containment_check(sol: EquilibriumSolution, eps):
    out = []
    for i, (a_, b_) in enumerate(sol.supports):
        if not np.isfinite(a_):
            out.append(True)
            continue
        x = sol.fields.centers[i]
        out.append(bool(x - eps <= a_ and b_ <= x + eps))
    return out
