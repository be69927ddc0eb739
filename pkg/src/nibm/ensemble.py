"""Exact finite-n layer: Gaussian weights, Gram matrix, correlation kernel, sampler.

With ``sigma^2 = T/n`` the time-``t`` positions of the n non-intersecting
bridges form a biorthogonal ensemble built from

    f_{k,d}(x) = P_{k,d}(x) exp(-(x - a_k)^2 / (2 t sigma^2)),      d < n_k
    g_{l,e}(y) = Q_{l,e}(y) exp(-(y - b_l)^2 / (2 (1 - t) sigma^2)),  e < m_l

with ``K(x, y) = sum_ij f_i(x) (G^{-1})_{ji} g_j(y)``, ``G_ij = int f_i g_j``.
P, Q span the polynomials of degree < n_k (< m_l); the default basis is
Hermite, scaled to the width of each Gaussian.

The Gram matrix carries factors ``exp(-(a_k - b_l)^2 / (2 sigma^2))`` that
underflow double precision already at moderate n, so G, its inverse and the
kernel are computed in mpmath with a working precision raised until the
inverse is trustworthy.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import IllConditioned, QuadratureBudgetExhausted, RejectionBudgetExhausted
from .graph import Counts, ProblemConfig, TransitionMatrix, finite_counts

log = logging.getLogger(__name__)

N_CAP = 64
MAX_DPS = 3000
GUARD_DIGITS = 30


@dataclass(frozen=True)
class EnsembleSpec:
    config: ProblemConfig
    counts: Counts

    @property
    def n(self):
        return self.counts.n

    @property
    def sigma2(self):
        return self.config.T / self.n

    @property
    def n_k(self):
        return self.counts.n_k

    @property
    def m_l(self):
        return self.counts.m_l

    @property
    def nkl(self):
        return self.counts.nkl

    def envelope(self, width=8.0):
        """Interval holding all time-t positions up to Gaussian tails."""
        cfg = self.config
        t = cfg.t
        centers = [(1 - t) * cfg.a[k] + t * cfg.b[l]
                   for k in range(cfg.p) for l in range(cfg.q) if self.nkl[k, l] > 0]
        w = width * math.sqrt(t * (1 - t) * cfg.T)
        return min(centers) - w, max(centers) + w


def ensemble_spec(cfg: ProblemConfig, m: TransitionMatrix, n: int, mode="strict") -> EnsembleSpec:
    if m.shape != (cfg.p, cfg.q):
        raise ValueError("transition matrix shape does not match the starting/ending points")
    return EnsembleSpec(cfg, finite_counts(m, n, mode))


# ---------------------------------------------------------------------------
# moments

def _gaussian_pair(spec, k, l):
    """Mean, variance and log prefactor of w_{1,k} w_{2,l}."""
    cfg = spec.config
    t, s2 = cfg.t, spec.sigma2
    a, b = mpmath.mpf(cfg.a[k]), mpmath.mpf(cfg.b[l])
    mu = (1 - mpmath.mpf(t)) * a + mpmath.mpf(t) * b
    var = mpmath.mpf(t) * (1 - mpmath.mpf(t)) * s2
    logpre = -(a - b) ** 2 / (2 * mpmath.mpf(s2))
    return mu, var, logpre


def _central_moments(var, top):
    """int u^j exp(-u^2 / (2 var)) du for j = 0..top."""
    out = [mpmath.mpf(0)] * (top + 1)
    out[0] = mpmath.sqrt(2 * mpmath.pi * var)
    for j in range(2, top + 1, 2):
        out[j] = out[j - 2] * (j - 1) * var
    return out


def gaussian_cross_moment(spec: EnsembleSpec, k, l, m) -> float:
    """int x^m w_{1,k}(x) w_{2,l}(x) dx in closed form."""
    if m < 0:
        raise ValueError("moment order must be nonnegative")
    with mpmath.workdps(50):
        mu, var, logpre = _gaussian_pair(spec, k, l)
        cm = _central_moments(var, m)
        # (u + mu)^m expanded binomially
        tot = mpmath.fsum(mpmath.binomial(m, j) * mu ** (m - j) * cm[j] for j in range(m + 1))
        return float(tot * mpmath.exp(logpre))


# ---------------------------------------------------------------------------
# bases

def _poly_mul_linear(c, shift, scale):
    """Coefficients (in u) of c(u) * (u + shift) / scale."""
    out = [mpmath.mpf(0)] * (len(c) + 1)
    for j, cj in enumerate(c):
        out[j + 1] += cj / scale
        out[j] += cj * shift / scale
    return out


def _basis_in_u(kind, degree, center, width, mu):
    """Basis polynomials of degree < ``degree`` as coefficient lists in u = x - mu."""
    polys = []
    if degree == 0:
        return polys
    if kind == "hermite":
        # He_d((x - center)/width) / sqrt(d!) with x - center = u + (mu - center)
        shift = mu - center
        prev, cur = None, [mpmath.mpf(1)]
        polys.append(cur)
        for d in range(1, degree):
            nxt = _poly_mul_linear(cur, shift, width)
            if prev is not None:
                for j, pj in enumerate(prev):
                    nxt[j] -= (d - 1) * pj
            prev, cur = cur, nxt
            polys.append(cur)
        return [[cj / mpmath.sqrt(mpmath.factorial(d)) for cj in p] for d, p in enumerate(polys)]
    if kind == "monomial":
        cur = [mpmath.mpf(1)]
        polys.append(cur)
        for _ in range(1, degree):
            cur = _poly_mul_linear(cur, mu, 1)
            polys.append(cur)
        return polys
    raise ValueError(f"unknown basis {kind!r}")


def _basis_values(kind, degree, center, width, x):
    """Basis polynomial values at mp point x."""
    vals = []
    if degree == 0:
        return vals
    if kind == "hermite":
        y = (x - center) / width
        prev, cur = mpmath.mpf(0), mpmath.mpf(1)
        vals.append(cur)
        for d in range(1, degree):
            prev, cur = cur, y * cur - (d - 1) * prev
            vals.append(cur)
        return [v / mpmath.sqrt(mpmath.factorial(d)) for d, v in enumerate(vals)]
    cur = mpmath.mpf(1)
    for _ in range(degree):
        vals.append(cur)
        cur = cur * x
    return vals


# ---------------------------------------------------------------------------
# Gram matrix and kernel

class KernelEvaluator:
    """Inverse Gram matrix and kernel evaluation at a fixed working precision."""

    def __init__(self, spec: EnsembleSpec, basis, dps, G, Ginv, cond):
        self.spec = spec
        self.basis = basis
        self.dps = dps
        self.G = G
        self.Ginv = Ginv
        self.cond = cond
        with mpmath.workdps(dps):
            # same widths, to the same precision, as in the Gram assembly
            self._w1, self._w2 = _widths(spec)
            self._Ginv_obj = np.array(Ginv.tolist(), dtype=object)

    @property
    def n(self):
        return self.spec.n

    @property
    def lost_digits(self):
        return float(mpmath.log10(self.cond))

    def _f(self, x):
        cfg = self.spec.config
        out = []
        for k in range(cfg.p):
            nk = int(self.spec.n_k[k])
            if nk == 0:
                continue
            a = mpmath.mpf(cfg.a[k])
            w = mpmath.exp(-(x - a) ** 2 / (2 * self._w1 ** 2))
            out += [v * w for v in _basis_values(self.basis, nk, a, self._w1, x)]
        return out

    def _g(self, y):
        cfg = self.spec.config
        out = []
        for l in range(cfg.q):
            ml = int(self.spec.m_l[l])
            if ml == 0:
                continue
            b = mpmath.mpf(cfg.b[l])
            w = mpmath.exp(-(y - b) ** 2 / (2 * self._w2 ** 2))
            out += [v * w for v in _basis_values(self.basis, ml, b, self._w2, y)]
        return out

    def kernel(self, x, y):
        """K(x, y) for scalar or array arguments (broadcast together)."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = np.empty(x.shape)
        with mpmath.workdps(self.dps):
            for idx in np.ndindex(x.shape):
                f = np.array(self._f(mpmath.mpf(float(x[idx]))), dtype=object)
                g = np.array(self._g(mpmath.mpf(float(y[idx]))), dtype=object)
                out[idx] = float(g.dot(self._Ginv_obj.dot(f)))
        return out

    def kxx(self, x):
        return self.kernel(x, x)

    def biorthogonality_error(self):
        """max |L^{-1} G U^{-1} - I| for the LU-transformed families."""
        with mpmath.workdps(self.dps):
            Gm = self.G
            P, L, U = _lu_parts(Gm)
            n = Gm.rows
            tilde = mpmath.inverse(L) * P * Gm * mpmath.inverse(U)
            return float(max(abs(tilde[i, j] - (1 if i == j else 0)) for i in range(n) for j in range(n)))


def _lu_parts(G):
    """Row-pivoted LU: P G = L U with unit lower L."""
    n = G.rows
    A = G.copy()
    perm = list(range(n))
    for c in range(n):
        r = max(range(c, n), key=lambda i: abs(A[i, c]))
        if r != c:
            for j in range(n):
                A[c, j], A[r, j] = A[r, j], A[c, j]
            perm[c], perm[r] = perm[r], perm[c]
        for i in range(c + 1, n):
            A[i, c] /= A[c, c]
            for j in range(c + 1, n):
                A[i, j] -= A[i, c] * A[c, j]
    L = mpmath.eye(n)
    U = mpmath.zeros(n, n)
    for i in range(n):
        for j in range(n):
            if j < i:
                L[i, j] = A[i, j]
            else:
                U[i, j] = A[i, j]
    P = mpmath.zeros(n, n)
    for i, pi in enumerate(perm):
        P[i, pi] = 1
    return P, L, U


def _widths(spec):
    """Standard deviations of w_{1,k} and w_{2,l} at the current precision."""
    t, s2 = mpmath.mpf(spec.config.t), mpmath.mpf(spec.sigma2)
    return mpmath.sqrt(t * s2), mpmath.sqrt((1 - t) * s2)


def _assemble(spec, basis):
    cfg = spec.config
    w1, w2 = _widths(spec)
    n = spec.n
    G = mpmath.zeros(n, n)
    row0 = 0
    for k in range(cfg.p):
        nk = int(spec.n_k[k])
        col0 = 0
        for l in range(cfg.q):
            ml = int(spec.m_l[l])
            if nk and ml:
                mu, var, logpre = _gaussian_pair(spec, k, l)
                pre = mpmath.exp(logpre)
                cm = _central_moments(var, nk + ml)
                P = _basis_in_u(basis, nk, mpmath.mpf(cfg.a[k]), w1, mu)
                Q = _basis_in_u(basis, ml, mpmath.mpf(cfg.b[l]), w2, mu)
                for d, pd in enumerate(P):
                    for e, qe in enumerate(Q):
                        acc = mpmath.mpf(0)
                        for r, pr in enumerate(pd):
                            for s, qs in enumerate(qe):
                                if (r + s) % 2 == 0:
                                    acc += pr * qs * cm[r + s]
                        G[row0 + d, col0 + e] = pre * acc
            col0 += ml
        row0 += nk
    return G


def _equilibrate(G):
    """Power-of-two row and column scalings R, C so that R G C has O(1) entries."""
    n = G.rows
    R = [mpmath.mpf(1)] * n
    C = [mpmath.mpf(1)] * n
    for i in range(n):
        big = max(abs(G[i, j]) for j in range(n))
        if big == 0:
            raise IllConditioned(f"Gram matrix row {i + 1} vanishes")
        R[i] = mpmath.ldexp(1, -int(mpmath.floor(mpmath.log(big, 2))))
    for j in range(n):
        big = max(abs(G[i, j] * R[i]) for i in range(n))
        if big == 0:
            raise IllConditioned(f"Gram matrix column {j + 1} vanishes")
        C[j] = mpmath.ldexp(1, -int(mpmath.floor(mpmath.log(big, 2))))
    Ge = mpmath.matrix(n, n)
    for i in range(n):
        for j in range(n):
            Ge[i, j] = R[i] * G[i, j] * C[j]
    return Ge, R, C


def _initial_dps(spec):
    cfg = spec.config
    worst = 0.0
    for k in range(cfg.p):
        for l in range(cfg.q):
            worst = max(worst, (cfg.a[k] - cfg.b[l]) ** 2 / (2 * spec.sigma2))
    return int(GUARD_DIGITS + 2 * spec.n + worst / math.log(10))


def gram_matrix(spec: EnsembleSpec, basis="hermite", dps=None, max_dps=MAX_DPS) -> KernelEvaluator:
    """Assemble and invert G, raising the precision until the inverse keeps
    ``GUARD_DIGITS`` significant digits."""
    if spec.n > N_CAP:
        raise IllConditioned(f"n = {spec.n} exceeds the implementation cap {N_CAP}")
    dps = dps or _initial_dps(spec)
    while True:
        with mpmath.workdps(dps):
            G = _assemble(spec, basis)
            Ge, R, C = _equilibrate(G)
            try:
                Ginv_e = mpmath.inverse(Ge)
            except ZeroDivisionError:
                Ginv_e = None
            if Ginv_e is not None:
                cond = mpmath.mnorm(Ge, 1) * mpmath.mnorm(Ginv_e, 1)
                lost = float(mpmath.log10(cond))
                if dps - lost >= GUARD_DIGITS:
                    n = G.rows
                    Ginv = mpmath.matrix(n, n)
                    for i in range(n):
                        for j in range(n):
                            Ginv[i, j] = C[i] * Ginv_e[i, j] * R[j]
                    log.debug("Gram matrix n=%d basis=%s dps=%d lost=%.1f", spec.n, basis, dps, lost)
                    return KernelEvaluator(spec, basis, dps, G, Ginv, cond)
            else:
                lost = dps
        if dps >= max_dps:
            raise IllConditioned(f"Gram matrix loses {lost:.0f} digits at {dps} digits of working precision")
        dps = min(max_dps, max(2 * dps, int(lost) + 2 * GUARD_DIGITS))


# ---------------------------------------------------------------------------
# quadrature helpers

def gl_panels(lo, hi, panels, order=24):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    h = np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + 0.5 * h[:, None] * x[None, :]).ravel()
    weights = (0.5 * h[:, None] * w[None, :]).ravel()
    return nodes, weights


def kernel_trace(ke: KernelEvaluator, tol=1e-9, max_panels=512):
    """int K(x, x) dx over the weight envelope by panel Gauss-Legendre, refining until stable."""
    lo, hi = ke.spec.envelope()
    panels = 16
    x, w = gl_panels(lo, hi, panels)
    prev = float(np.sum(w * ke.kxx(x)))
    while panels < max_panels:
        panels *= 2
        x, w = gl_panels(lo, hi, panels)
        cur = float(np.sum(w * ke.kxx(x)))
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureBudgetExhausted(f"kernel trace unsettled at {panels} panels")


def mean_density(ke: KernelEvaluator, x):
    """(1/n) K_n(x, x)."""
    return ke.kxx(x) / ke.n


def reproducing_error(ke: KernelEvaluator, pts, panels=64):
    """max |int K(x, s) K(s, y) ds - K(x, y)| over pairs of ``pts``."""
    lo, hi = ke.spec.envelope()
    s, w = gl_panels(lo, hi, panels)
    pts = np.asarray(pts, dtype=float)
    Kxs = ke.kernel(pts[:, None], s[None, :])
    Ksy = ke.kernel(s[:, None], pts[None, :])
    lhs = (Kxs * w[None, :]) @ Ksy
    rhs = ke.kernel(pts[:, None], pts[None, :])
    return float(np.max(np.abs(lhs - rhs)))


def bridge_density(cfg: ProblemConfig, x, k=0, l=0):
    """Time-t density of one bridge from a_k to b_l with variance parameter T."""
    t = cfg.t
    mu = (1 - t) * cfg.a[k] + t * cfg.b[l]
    var = cfg.T * t * (1 - t)
    x = np.asarray(x, dtype=float)
    return np.exp(-(x - mu) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)


# ---------------------------------------------------------------------------
# brute-force oracle

def _float_families(spec):
    """(center, variance, degree) of the monomial-times-Gaussian functions f_i and g_j."""
    cfg = spec.config
    t, s2 = cfg.t, spec.sigma2
    fs = [(cfg.a[k], t * s2, d) for k in range(cfg.p) for d in range(int(spec.n_k[k]))]
    gs = [(cfg.b[l], (1 - t) * s2, e) for l in range(cfg.q) for e in range(int(spec.m_l[l]))]
    return fs, gs


def _fam_values(fam, x):
    x = np.asarray(x, dtype=float)
    return np.stack([(x - c) ** d * np.exp(-(x - c) ** 2 / (2 * v)) for c, v, d in fam])


def _sign(perm):
    s, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            s = -s
    return s


def brute_force_marginal(spec: EnsembleSpec, m=1, order=16, tol=1e-12, max_panels=4096):
    """m-point marginal density of the pdf proportional to det[f_i(x_j)] det[g_k(x_j)].

    Both determinants are expanded over permutations, so every term is a
    product of one-variable functions and the integral over the last n - m
    coordinates factorizes into float 1-D integrals of f_i g_k (panel
    Gauss-Legendre, refined until stable).  Nothing here touches the Gram
    matrix machinery or extended precision; limited to n <= 3.
    """
    n = spec.n
    if n > 3:
        raise QuadratureBudgetExhausted("brute-force marginals are limited to n <= 3")
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    fs, gs = _float_families(spec)
    lo, hi = spec.envelope()

    def pair_integrals(panels):
        x, w = gl_panels(lo, hi, panels, order)
        return (_fam_values(fs, x) * w) @ _fam_values(gs, x).T

    panels = 16
    I = pair_integrals(panels)
    while True:
        if panels * 2 > max_panels:
            raise QuadratureBudgetExhausted(f"1-D integrals unsettled at {panels} panels")
        panels *= 2
        I2 = pair_integrals(panels)
        done = np.max(np.abs(I2 - I)) <= tol * np.max(np.abs(I2))
        I = I2
        if done:
            break
    perms = [(p, _sign(p)) for p in itertools.permutations(range(n))]
    # weight of each (sigma, tau) term from the integrated coordinates
    terms = []
    for sg, ss in perms:
        for tg, ts in perms:
            c = ss * ts * np.prod([I[sg[j], tg[j]] for j in range(m, n)])
            terms.append((sg[:m], tg[:m], c))
    Z = sum(ss * ts * np.prod([I[sg[j], tg[j]] for j in range(n)]) for sg, ss in perms for tg, ts in perms)

    def marginal(points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != m:
            raise ValueError(f"points need a trailing axis of length {m}")
        F = [_fam_values(fs, pts[..., j]) for j in range(m)]
        G = [_fam_values(gs, pts[..., j]) for j in range(m)]
        out = np.zeros(pts.shape[:-1])
        for sg, tg, c in terms:
            term = np.full(pts.shape[:-1], c)
            for j in range(m):
                term = term * F[j][sg[j]] * G[j][tg[j]]
            out += term
        return out / Z

    return marginal


# ---------------------------------------------------------------------------
# sampler

@dataclass
class PathBundle:
    times: np.ndarray
    slice_time: float
    slices: np.ndarray  # (accepted, n) positions at slice_time
    paths: np.ndarray  # (kept, n, len(times)) full trajectories of the first accepted bundles
    accepted: int
    rejected: int
    seed: int

    @property
    def acceptance(self):
        tot = self.accepted + self.rejected
        return self.accepted / tot if tot else float("nan")


def _groups(spec):
    """(k, l, count) for the nonzero n_{k,l}, top group first."""
    cfg = spec.config
    return [(k, l, int(spec.nkl[k, l])) for k in range(cfg.p) for l in range(cfg.q) if spec.nkl[k, l] > 0]


def _brownian_bridge(rng, shape, times, var):
    """Standard Brownian bridges with variance parameter ``var`` on ``times`` (last axis)."""
    dt = np.diff(times)
    inc = rng.standard_normal(shape + (dt.size,)) * np.sqrt(var * dt)
    W = np.concatenate([np.zeros(shape + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
    return W - times * W[..., -1:]


def _group_paths(rng, batch, c, times, s2, a, b, proposal):
    drift = (1 - times) * a + times * b
    if c == 1 or proposal == "independent":
        X = _brownian_bridge(rng, (batch, c), times, s2)
        return X + drift
    # Hermitian Brownian bridge: eigenvalues are c non-colliding bridges
    diag = _brownian_bridge(rng, (batch, c), times, s2)
    iu = np.triu_indices(c, 1)
    re = _brownian_bridge(rng, (batch, len(iu[0])), times, s2 / 2)
    im = _brownian_bridge(rng, (batch, len(iu[0])), times, s2 / 2)
    if c == 2:
        mid = 0.5 * (diag[:, 0] + diag[:, 1])
        rad = np.sqrt((0.5 * (diag[:, 0] - diag[:, 1])) ** 2 + re[:, 0] ** 2 + im[:, 0] ** 2)
        return np.stack([mid + rad, mid - rad], axis=1) + drift
    H = np.zeros((batch, times.size, c, c), dtype=complex)
    for j in range(c):
        H[:, :, j, j] = diag[:, j, :]
    for m_, (r, s) in enumerate(zip(*iu)):
        H[:, :, r, s] = re[:, m_, :] + 1j * im[:, m_, :]
        H[:, :, s, r] = re[:, m_, :] - 1j * im[:, m_, :]
    ev = np.linalg.eigvalsh(H)[..., ::-1]  # descending
    return np.moveaxis(ev, -1, 1) + drift


def sample_paths(spec: EnsembleSpec, n_bundles=1000, steps=256, seed=0, max_rejects=None,
                 proposal="dyson", keep_paths=16, batch=4096) -> PathBundle:
    """Rejection sampler for the non-intersecting bridge bundle.

    ``proposal="dyson"`` draws each (k, l) group as eigenvalue paths of a
    Hermitian Brownian bridge, which are non-colliding within the group;
    ``proposal="independent"`` draws plain independent bridges, which is only
    practical when every group holds a single path (paths leaving the same
    point cross almost surely on a fine grid).  A bundle is
    accepted when all paths are strictly ordered at every interior grid time.
    """
    if spec.n > 10:
        raise ValueError("rejection sampling is limited to n <= 10")
    if proposal not in ("dyson", "independent"):
        raise ValueError(f"unknown proposal {proposal!r}")
    cfg = spec.config
    times = np.linspace(0.0, 1.0, steps + 1)
    it = int(np.argmin(np.abs(times - cfg.t)))
    s2 = spec.sigma2
    groups = _groups(spec)
    if max_rejects is None:
        max_rejects = 10_000 * n_bundles
    slices, kept = [], []
    accepted = rejected = 0
    b_idx = 0
    while accepted < n_bundles:
        rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, b_idx]))
        b_idx += 1
        parts = [_group_paths(rng, batch, c, times, s2, cfg.a[k], cfg.b[l], proposal) for k, l, c in groups]
        X = np.concatenate(parts, axis=1)  # (batch, n, times)
        inner = X[:, :, 1:-1]
        if proposal == "independent":
            # labels inside a group are exchangeable: fix their order at the first interior time
            start = 0
            for _, _, c in groups:
                order = np.argsort(-inner[:, start:start + c, 0], axis=1)
                X[:, start:start + c] = np.take_along_axis(X[:, start:start + c], order[:, :, None], axis=1)
                start += c
            inner = X[:, :, 1:-1]
        ok = np.all(inner[:, :-1, :] > inner[:, 1:, :], axis=(1, 2))
        good = np.nonzero(ok)[0]
        need = n_bundles - accepted
        if good.size > need:
            # count rejections only up to the last bundle we keep
            last = good[need - 1]
            rejected += int((~ok[:last + 1]).sum())
            good = good[:need]
        else:
            rejected += int((~ok).sum())
        accepted += good.size
        slices.append(X[good, :, it])
        if len(kept) < keep_paths:
            kept.extend(X[good[:keep_paths - len(kept)]])
        if rejected > max_rejects:
            raise RejectionBudgetExhausted(
                f"{rejected} rejections for {accepted} accepted bundles (budget {max_rejects})")
    paths = np.array(kept) if kept else np.zeros((0, spec.n, times.size))
    return PathBundle(times, float(times[it]), np.concatenate(slices, axis=0), paths, accepted, rejected, seed)


def l1_distance(ke: KernelEvaluator, density, npts=2001):
    """int |(1/n) K_n(x, x) - density(x)| dx over the weight envelope (trapezoid rule)."""
    lo, hi = ke.spec.envelope()
    x = np.linspace(lo, hi, npts)
    return float(np.trapezoid(np.abs(mean_density(ke, x) - density(x)), x))
