"""CSV writing with exact float round-tripping, and the matching reader."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .graph import ProblemConfig, TransitionMatrix, build_tree, interaction_matrix
from .equilibrium import EquilibriumSolution, external_fields
from .errors import MissingArtifact
from .measures import ChebMeasure, GridMeasure


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    """Header and rows; numeric cells come back as float (int-looking ones as int)."""
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"{path} not found")
    with path.open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = []
        for row in r:
            rows.append([_parse(c) for c in row])
    return header, rows


def _parse(cell):
    for cast in (int, float):
        try:
            return cast(cell)
        except ValueError:
            pass
    return cell


# ---------------------------------------------------------------------------
# solution persistence

def _measure_dict(m):
    if m is None:
        return None
    if m.kind == "cheb":
        return {"kind": "cheb", "center": m.center, "radius": m.radius, "coeffs": m.coeffs.tolist()}
    return {"kind": "grid", "edges": m.edges.tolist(), "weights": m.weights.tolist()}


def _measure_from(d):
    if d is None:
        return None
    if d["kind"] == "cheb":
        return ChebMeasure(d["center"], d["radius"], d["coeffs"])
    return GridMeasure(d["edges"], d["weights"])


def solution_to_json(sol: EquilibriumSolution, m: TransitionMatrix) -> str:
    cfg = sol.config
    data = {
        "problem": {"a": list(cfg.a), "b": list(cfg.b), "t": cfg.t, "T": cfg.T},
        "transitions": [[f"{x.numerator}/{x.denominator}" for x in row] for row in m.entries],
        "masses": sol.fields.masses.tolist(),
        "method": sol.method,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "energy": sol.energy,
        "supports": [[float(a), float(b)] for a, b in sol.supports],
        "constants": [float(c) for c in sol.constants],
        "grid_cells": list(sol.grid_cells),
        "measures": [_measure_dict(mi) for mi in sol.measures],
        "grid_measures": [_measure_dict(mi) for mi in sol.grid_measures],
    }
    return json.dumps(data, indent=1, allow_nan=True)


def solution_from_json(text: str) -> EquilibriumSolution:
    d = json.loads(text)
    pr = d["problem"]
    cfg = ProblemConfig(pr["a"], pr["b"], pr["t"], pr["T"])
    m = TransitionMatrix(d["transitions"])
    tree = build_tree(m)
    A, _ = interaction_matrix(tree)
    fields = external_fields(cfg, tree, d["masses"])
    return EquilibriumSolution(
        cfg, tree, fields, A,
        [_measure_from(x) for x in d["measures"]],
        [_measure_from(x) for x in d["grid_measures"]],
        np.array(d["supports"], dtype=float), np.array(d["constants"], dtype=float),
        d["residual"], d["energy"], d["converged"], d["iterations"], d["method"], [], d["grid_cells"])


def load_solution(path) -> EquilibriumSolution:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifact(f"{path} not found; run 'solve' first")
    return solution_from_json(path.read_text())
