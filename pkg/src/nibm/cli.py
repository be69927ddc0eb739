"""Command-line front end.

    nibm --config run.ini validate
    nibm --config run.ini --out out solve
    nibm --config run.ini --out out spectral
    nibm --config run.ini --n 6 kernel
    nibm --config run.ini --n 6 --seed 1 sample
    nibm --config run.ini --out out compare

Every command writes plain CSV into the output directory.  Errors map to exit
codes through ``NibmError.exit_code``.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .csvio import load_solution, solution_to_json, write_csv
from .equilibrium import (GridOverlapWarning, edge_exponent_fit, el_residual, solve_equilibrium)
from .errors import ConfigError, InsufficientResolution, MaxIterationsExceeded, NibmError
from .graph import build_tree, interaction_fractions, interaction_matrix, leaf_peel_order, vertex_label

log = logging.getLogger("nibm")

EXIT_OK = 0
EXIT_TOUCHING = 3


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _settings(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    rc = load_config(args.config)
    if args.out is not None:
        rc.out = args.out
    if args.tol is not None:
        rc.solver.tol = args.tol
    if args.grid is not None:
        rc.solver.grid = args.grid
    if args.seed is not None:
        rc.ensemble.seed = args.seed
    if args.n is not None:
        rc.ensemble.n = args.n
    if rc.solver.grid < 8 or rc.solver.tol <= 0:
        raise ConfigError("need --grid >= 8 and --tol > 0")
    if rc.ensemble.n is not None and rc.ensemble.n < 1:
        raise ConfigError("--n must be positive")
    return rc


def _out(rc: RunConfig) -> Path:
    p = Path(rc.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _need_n(rc):
    if rc.ensemble.n is None:
        raise ConfigError("ensemble size missing: set n in [ensemble] or pass --n")
    return rc.ensemble.n


# ---------------------------------------------------------------------------
# commands

def cmd_validate(rc: RunConfig, out=None):
    out = out or sys.stdout
    tree = build_tree(rc.transitions)
    A, _ = interaction_matrix(tree)
    print(f"p = {tree.p}, q = {tree.q}, {tree.n_edges} edges", file=out)
    print("edges (i k l t_kl):", file=out)
    for line in tree.summary_lines():
        print(line, file=out)
    print("interaction matrix A:", file=out)
    for row in interaction_fractions(tree):
        print(" ".join(f"{_frac(x):>4}" for x in row), file=out)
    print(f"smallest eigenvalue of A: {np.linalg.eigvalsh(A).min():.12g}", file=out)
    print("leaf-peel order: " + " ".join(vertex_label(tree, v) for v in leaf_peel_order(tree)), file=out)
    print("valid", file=out)
    return EXIT_OK


def _write_solution(rc, sol, outdir):
    M = len(sol.measures)
    rows = []
    for i in range(M):
        gm = sol.grid_measures[i]
        if gm is None:
            continue
        mids = gm.midpoints
        for x, r in zip(mids, sol.density(i, mids)):
            rows.append((i + 1, x, r))
    write_csv(outdir / "density.csv", ["component", "x", "rho"], rows)

    reports = el_residual(sol)
    write_csv(outdir / "supports.csv", ["component", "alpha", "beta", "L"],
              [(i + 1, a_, b_, reports[i].L) for i, (a_, b_) in enumerate(sol.supports)
               if sol.measures[i] is not None])
    write_csv(outdir / "el_report.csv",
              ["component", "L", "on_support", "scale", "scaled", "off_support_min", "gap_midpoint_min"],
              [(r.component + 1, r.L, r.on_support, r.scale, r.scaled, r.off_support_min, r.gap_midpoint_min)
               for r in reports if not r.trivial])

    rows = []
    for i in range(M):
        if sol.measures[i] is None:
            continue
        for side in ("left", "right"):
            try:
                e, c = edge_exponent_fit(sol, i, side)
            except InsufficientResolution as exc:
                log.warning("%s", exc)
                e, c = float("nan"), float("nan")
            rows.append((i + 1, side, e, c))
    write_csv(outdir / "edge_exponents.csv", ["component", "side", "exponent", "coeff"], rows)
    (outdir / "solution.json").write_text(solution_to_json(sol, rc.transitions))
    return reports


def cmd_solve(rc: RunConfig, out=None):
    out = out or sys.stdout
    outdir = _out(rc)
    tree = build_tree(rc.transitions)
    s = rc.solver
    code = EXIT_OK
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridOverlapWarning)
        try:
            sol = solve_equilibrium(rc.problem, tree, grid=s.grid, tol=s.tol, max_iter=s.max_iter,
                                    refine=s.refine)
        except MaxIterationsExceeded as exc:
            if exc.solution is None:
                raise
            sol = exc.solution
            code = exc.exit_code
            print(f"not converged: {exc}", file=out)
    reports = _write_solution(rc, sol, outdir)
    if sol.method == "grid" and code == EXIT_OK:
        print("one-cut refinement not applied; reporting the grid solution", file=out)
    print(f"method {sol.method}, iterations {sol.iterations}, KKT residual {sol.residual:.3e}", file=out)
    for i, (a_, b_) in enumerate(sol.supports):
        if sol.measures[i] is None:
            print(f"component {i + 1}: zero mass", file=out)
            continue
        r = reports[i]
        print(f"component {i + 1}: [{a_:.10g}, {b_:.10g}]  L = {r.L:.10g}  "
              f"EL residual {r.scaled:.2e}", file=out)
    if code == EXIT_OK and not sol.disjoint:
        print("supports touch or overlap: outside the disjoint-support regime", file=out)
        code = EXIT_TOUCHING
    return code


def _lens_rows(rep):
    F, lab = rep.field, rep.labels
    sign = np.sign(F).astype(int)
    RE, IM = np.meshgrid(rep.re, rep.im)
    return zip(RE.ravel(), IM.ravel(), sign.ravel(), lab.ravel())


def cmd_spectral(rc: RunConfig, out=None):
    out = out or sys.stdout
    from .spectral import SpectralContext

    outdir = _out(rc)
    sol = load_solution(outdir / "solution.json")
    ctx = SpectralContext(sol)
    V = ctx.p + ctx.q
    live = [i for i in range(ctx.M) if sol.measures[i] is not None]
    ok = True

    # boundary values along the real line, from above
    lo, hi = sol.window()
    span = hi - lo
    x = np.linspace(lo - 0.5 * span, hi + 0.5 * span, 801)
    rows = []
    for j in range(V):
        v = ctx.xi(j, x, side=1)
        rows += [(j + 1, xx, z.real, z.imag) for xx, z in zip(x, v)]
    write_csv(outdir / "xi_boundary.csv", ["sheet", "x", "re", "im"], rows)
    rows = []
    for i in range(ctx.M):
        k, pl = ctx.tree.endpoints(i)
        v = ctx.lam(k, x, 1) - ctx.lam(pl, x, 1)
        rows += [(i + 1, xx, z.real, z.imag) for xx, z in zip(x, v)]
    write_csv(outdir / "lambda_diff.csv", ["sheet", "x", "re", "im"], rows)

    rows = []
    for c in ctx.all_contours():
        passed = c.error <= 1e-6
        ok &= passed
        rows.append((c.sheet + 1, c.component + 1, c.value.real, c.value.imag,
                     c.expected.real, c.expected.imag, c.error, passed))
    write_csv(outdir / "contours.csv",
              ["sheet", "component", "re", "im", "expected_re", "expected_im", "error", "pass"], rows)
    n_contour = sum(r[-1] for r in rows)
    print(f"contour integrals: {n_contour}/{len(rows)} within 1e-6", file=out)

    res = ctx.constant_residuals()
    # constants in peel order; the last vertex is the root, pinned to 0
    write_csv(outdir / "lambda_constants.csv", ["peel_position", "vertex", "constant"],
              [(pos + 1, vertex_label(ctx.tree, v), ctx.ctilde[v]) for pos, v in enumerate(ctx.peel_order)])
    print(f"lambda-constant residual: {res.max() if res.size else 0.0:.3e}", file=out)
    ok &= bool(res.size == 0 or res.max() <= 1e-8)

    el = {r.component: r for r in el_residual(sol)}
    rows = []
    for i in live:
        g = ctx.gluing_residual(i)
        scale = ctx.xi_scale(i)
        d = ctx.density_identity_residual(i)
        rows.append((i + 1, g, scale, d, el[i].on_support, el[i].scale))
    write_csv(outdir / "gluing.csv", ["component", "gluing", "xi_scale", "density_identity", "el", "el_scale"], rows)
    print(f"max gluing residual {max(r[1] for r in rows):.3e}, "
          f"density identity {max(r[3] for r in rows):.3e}", file=out)

    rows = []
    for j in range(V):
        for R in (1e2, 1e3, 1e4):
            rows.append((j + 1, R, ctx.xi_asymptotic_remainder(j, R)))
    write_csv(outdir / "xi_asymptotics.csv", ["sheet", "R", "remainder"], rows)

    summary = []
    if ctx.M > 1 and sol.disjoint:
        for i in range(ctx.M - 1):
            if sol.measures[i] is None or sol.measures[i + 1] is None:
                continue
            rep = ctx.lens_feasibility(i)
            write_csv(outdir / f"lens_step{i + 1}.csv", ["re_z", "im_z", "sign", "component_id"], _lens_rows(rep))
            summary.append((i + 1, rep.kind, rep.alpha_in_plus, rep.beta_in_minus,
                            rep.n_unbounded_plus, rep.n_unbounded_minus, rep.feasible and rep.unique))
            ok &= rep.feasible and rep.unique
            print(f"lens step {i + 1} ({rep.kind}): feasible={rep.feasible} unique={rep.unique}", file=out)
    write_csv(outdir / "lens_summary.csv",
              ["step", "kind", "alpha_in_plus", "beta_in_minus", "n_unbounded_plus", "n_unbounded_minus", "pass"],
              summary)
    print("all spectral checks passed" if ok else "some spectral checks failed", file=out)
    return EXIT_OK


def _ensemble(rc, n):
    from .ensemble import ensemble_spec
    return ensemble_spec(rc.problem, rc.transitions, n, rc.ensemble.rounding)


def cmd_kernel(rc: RunConfig, out=None):
    out = out or sys.stdout
    from .ensemble import gram_matrix, kernel_trace, mean_density

    outdir = _out(rc)
    n = _need_n(rc)
    spec = _ensemble(rc, n)
    ke = gram_matrix(spec, rc.ensemble.basis)
    lo, hi = spec.envelope()
    x = np.linspace(lo, hi, 801)
    write_csv(outdir / f"kernel_n{n}.csv", ["x", "kxx_over_n"], zip(x, mean_density(ke, x)))
    print(f"n = {n}: trace {kernel_trace(ke):.12g}, working precision {ke.dps} digits", file=out)
    return EXIT_OK


def cmd_sample(rc: RunConfig, out=None):
    out = out or sys.stdout
    from .ensemble import sample_paths

    outdir = _out(rc)
    n = _need_n(rc)
    e = rc.ensemble
    spec = _ensemble(rc, n)
    pb = sample_paths(spec, n_bundles=e.samples, steps=e.time_steps, seed=e.seed,
                      max_rejects=e.max_rejects, keep_paths=1)
    path = pb.paths[0]
    write_csv(outdir / "paths.csv", ["path_id", "time", "x"],
              ((j + 1, t, v) for j in range(n) for t, v in zip(pb.times, path[j])))
    write_csv(outdir / "slices.csv", ["bundle", "path_id", "x"],
              ((b + 1, j + 1, pb.slices[b, j]) for b in range(pb.accepted) for j in range(n)))
    write_csv(outdir / "sampler_stats.csv", ["accepted", "rejected", "seed"], [(pb.accepted, pb.rejected, pb.seed)])
    print(f"{pb.accepted} accepted, {pb.rejected} rejected (acceptance {pb.acceptance:.3%}), "
          f"slice time {pb.slice_time:.6g}", file=out)
    return EXIT_OK


def cmd_compare(rc: RunConfig, out=None):
    out = out or sys.stdout
    from .ensemble import gram_matrix, l1_distance

    outdir = _out(rc)
    sol = load_solution(outdir / "solution.json")
    live = [i for i in range(len(sol.measures)) if sol.measures[i] is not None]

    def rho(x):
        return sum(sol.density(i, x) for i in live)

    rows = []
    for n in rc.ensemble.n_sequence:
        ke = gram_matrix(_ensemble(rc, n), rc.ensemble.basis)
        d = l1_distance(ke, rho)
        rows.append((n, d))
        print(f"n = {n:3d}  L1 = {d:.6e}", file=out)
    write_csv(outdir / "compare.csv", ["n", "l1"], rows)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "spectral": cmd_spectral,
    "kernel": cmd_kernel,
    "sample": cmd_sample,
    "compare": cmd_compare,
}


def _flags(p, suppress):
    d = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    p.add_argument("--config", metavar="PATH", help="run configuration (INI)", **d)
    p.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)", **d)
    p.add_argument("--tol", type=float, help="solver tolerance", **d)
    p.add_argument("--grid", type=int, help="cells per component", **d)
    p.add_argument("--seed", type=int, help="sampler seed", **d)
    p.add_argument("--n", type=int, help="number of paths", **d)


def build_parser():
    ap = argparse.ArgumentParser(prog="nibm", description="Non-intersecting Brownian motions: "
                                 "equilibrium problems, spectral checks and finite-n ensembles.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    _flags(ap, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _flags(common, suppress=True)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = _settings(args)
        return COMMANDS[args.command](rc)
    except NibmError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
