"""Run configuration: an INI-style file with exact rational transition numbers.

Example::

    [problem]
    a = 1, -1
    b = 1, -1
    t = 1/2
    T = 0.05

    [transitions]
    row1 = 1/3, 0
    row2 = 1/3, 1/3

    [solver]
    grid = 2000

    [ensemble]
    n = 6
    seed = 0
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .graph import ProblemConfig, TransitionMatrix, parse_number

SCHEMA = {
    "problem": {"a", "b", "t", "T", "p", "q"},
    "transitions": None,  # row1, row2, ... checked separately
    "solver": {"grid", "tol", "max_iter", "refine"},
    "ensemble": {"n", "seed", "time_steps", "samples", "n_sequence", "rounding", "basis", "max_rejects"},
    "output": {"dir"},
}


@dataclass
class SolverSettings:
    grid: int = 2000
    tol: float = 1e-6
    max_iter: int = 100_000
    refine: bool = True


@dataclass
class EnsembleSettings:
    n: int | None = None
    seed: int = 0
    time_steps: int = 256
    samples: int = 1000
    n_sequence: tuple = (4, 8, 16)
    rounding: str = "strict"
    basis: str = "hermite"
    max_rejects: int | None = None


@dataclass
class RunConfig:
    problem: ProblemConfig
    transitions: TransitionMatrix
    solver: SolverSettings = field(default_factory=SolverSettings)
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)
    out: str = "out"


def _vector(text, key):
    parts = [s for s in str(text).replace(";", ",").split(",") if s.strip()]
    if not parts:
        raise ConfigError(f"{key} is empty")
    return tuple(float(parse_number(s)) for s in parts)


def _int(text, key):
    try:
        return int(str(text).strip())
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {text!r}") from exc


def _float(text, key):
    try:
        return float(parse_number(text))
    except ConfigError as exc:
        raise ConfigError(f"{key} must be a number, got {text!r}") from exc


def _bool(text, key):
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {text!r}")


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep "T" distinct from "t"
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        allowed = SCHEMA[sec]
        for key in cp[sec]:
            if allowed is None:
                if not (key.startswith("row") and key[3:].isdigit() and int(key[3:]) >= 1):
                    raise ConfigError(f"unknown key {key!r} in [transitions]; use row1, row2, ...")
            elif key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
    for sec in ("problem", "transitions"):
        if sec not in cp:
            raise ConfigError(f"missing section [{sec}]")
    pr = cp["problem"]
    for key in ("a", "b", "t", "T"):
        if key not in pr:
            raise ConfigError(f"missing key {key!r} in [problem]")
    problem = ProblemConfig(_vector(pr["a"], "a"), _vector(pr["b"], "b"), _float(pr["t"], "t"), _float(pr["T"], "T"))
    if "p" in pr and _int(pr["p"], "p") != problem.p:
        raise ConfigError(f"p = {pr['p']} but {problem.p} starting points given")
    if "q" in pr and _int(pr["q"], "q") != problem.q:
        raise ConfigError(f"q = {pr['q']} but {problem.q} ending points given")

    tr = cp["transitions"]
    idx = sorted(int(k[3:]) for k in tr)
    if not idx:
        raise ConfigError("empty transition matrix")
    if idx != list(range(1, len(idx) + 1)):
        raise ConfigError("transition rows must be numbered row1, row2, ... without gaps")
    rows = []
    for i in idx:
        cells = [s.strip() for s in tr[f"row{i}"].replace(";", ",").split(",") if s.strip()]
        rows.append(cells)
    shape = (len(rows), max(len(r) for r in rows))
    if shape != (problem.p, problem.q) and all(rows):
        raise ConfigError(f"transition matrix is {shape[0]}x{shape[1]}, expected {problem.p}x{problem.q}")
    m = TransitionMatrix(rows)

    solver = SolverSettings()
    if "solver" in cp:
        s = cp["solver"]
        if "grid" in s:
            solver.grid = _int(s["grid"], "grid")
        if "tol" in s:
            solver.tol = _float(s["tol"], "tol")
        if "max_iter" in s:
            solver.max_iter = _int(s["max_iter"], "max_iter")
        if "refine" in s:
            solver.refine = _bool(s["refine"], "refine")
    if solver.grid < 8 or solver.tol <= 0 or solver.max_iter < 1:
        raise ConfigError("solver settings need grid >= 8, tol > 0, max_iter >= 1")

    ens = EnsembleSettings()
    if "ensemble" in cp:
        e = cp["ensemble"]
        if "n" in e:
            ens.n = _int(e["n"], "n")
        if "seed" in e:
            ens.seed = _int(e["seed"], "seed")
        if "time_steps" in e:
            ens.time_steps = _int(e["time_steps"], "time_steps")
        if "samples" in e:
            ens.samples = _int(e["samples"], "samples")
        if "n_sequence" in e:
            ens.n_sequence = tuple(_int(s, "n_sequence") for s in e["n_sequence"].split(",") if s.strip())
        if "rounding" in e:
            ens.rounding = e["rounding"].strip()
        if "basis" in e:
            ens.basis = e["basis"].strip()
        if "max_rejects" in e:
            ens.max_rejects = _int(e["max_rejects"], "max_rejects")
    if ens.rounding not in ("strict", "largest-remainder"):
        raise ConfigError(f"rounding must be strict or largest-remainder, got {ens.rounding!r}")
    if ens.basis not in ("hermite", "monomial"):
        raise ConfigError(f"basis must be hermite or monomial, got {ens.basis!r}")
    if ens.n is not None and ens.n < 1:
        raise ConfigError("n must be positive")
    if ens.time_steps < 2 or ens.samples < 1:
        raise ConfigError("time_steps must be >= 2 and samples >= 1")

    out = cp["output"]["dir"].strip() if "output" in cp and "dir" in cp["output"] else "out"
    return RunConfig(problem, m, solver, ens, out)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(p.read_text())
