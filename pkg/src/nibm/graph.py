"""Transition data, the bipartite path tree and its interaction matrix.

Vertices are numbered ``0..p-1`` for the starting points ``a_k`` and
``p..p+q-1`` for the ending points ``b_l``; this is also the sheet numbering
used by :mod:`nibm.spectral`.  All indices are 0-based; text output converts
to the 1-based labels used in the literature.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AntiDiagonalClash, ConfigError, NonIntegerCounts, NotConnected, ZeroRowOrColumn


def parse_number(text) -> Fraction:
    """Parse ``"3/7"``, ``"0.25"``, ``"2"`` (or a number) into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(text).limit_denominator(10**12)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


@dataclass(frozen=True)
class ProblemConfig:
    a: tuple
    b: tuple
    t: float
    T: float

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "T", float(self.T))
        if not self.a or not self.b:
            raise ConfigError("need at least one starting and one ending point")
        if any(x <= y for x, y in zip(self.a, self.a[1:])):
            raise ConfigError("starting points must be strictly decreasing")
        if any(x <= y for x, y in zip(self.b, self.b[1:])):
            raise ConfigError("ending points must be strictly decreasing")
        if not 0.0 < self.t < 1.0:
            raise ConfigError("t must lie in (0, 1)")
        if not self.T > 0.0:
            raise ConfigError("T must be positive")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)


class TransitionMatrix:
    """p x q matrix of exact nonnegative rationals summing to one."""

    def __init__(self, rows: Sequence[Sequence]):
        entries = tuple(tuple(parse_number(x) for x in row) for row in rows)
        if not entries or not entries[0]:
            raise ConfigError("empty transition matrix")
        width = len(entries[0])
        if any(len(row) != width for row in entries):
            raise ConfigError("ragged transition matrix")
        if any(x < 0 for row in entries for x in row):
            raise ConfigError("transition numbers must be nonnegative")
        total = sum(x for row in entries for x in row)
        if total != 1:
            raise ConfigError(f"transition numbers sum to {total}, not 1")
        for k, row in enumerate(entries):
            if not any(row):
                raise ZeroRowOrColumn(f"row {k + 1} has no nonzero transition number")
        for l in range(width):
            if not any(row[l] for row in entries):
                raise ZeroRowOrColumn(f"column {l + 1} has no nonzero transition number")
        self.entries = entries

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    def __getitem__(self, kl):
        k, l = kl
        return self.entries[k][l]

    def nonzeros(self):
        return [(k, l, x) for k, row in enumerate(self.entries) for l, x in enumerate(row) if x]

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def __repr__(self):
        rows = "; ".join(" ".join(str(x) for x in row) for row in self.entries)
        return f"TransitionMatrix([{rows}])"


class Edge(NamedTuple):
    k: int
    l: int
    weight: Fraction


@dataclass(frozen=True)
class PathTree:
    p: int
    q: int
    edges: tuple  # Edge, ordered by i = k + l

    @property
    def vertex_count(self) -> int:
        return self.p + self.q

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def endpoints(self, i):
        """Vertex ids (a-vertex, b-vertex) of edge i."""
        e = self.edges[i]
        return e.k, self.p + e.l

    def edges_at(self, vertex):
        """Indices of the edges incident to ``vertex`` (a sheet number)."""
        if vertex < self.p:
            return [i for i, e in enumerate(self.edges) if e.k == vertex]
        return [i for i, e in enumerate(self.edges) if e.l == vertex - self.p]

    def masses(self) -> np.ndarray:
        return np.array([float(e.weight) for e in self.edges])

    def summary_lines(self):
        return [f"{i + 1} {e.k + 1} {e.l + 1} {e.weight.numerator}/{e.weight.denominator}"
                for i, e in enumerate(self.edges)]


def vertex_label(tree: PathTree, v: int) -> str:
    return f"a{v + 1}" if v < tree.p else f"b{v - tree.p + 1}"


def build_tree(m: TransitionMatrix) -> PathTree:
    """Validate the nonzero pattern as a right-down path and order its edges."""
    p, q = m.shape
    nz = m.nonzeros()
    by_diag = {}
    for k, l, x in nz:
        i = k + l
        if i in by_diag:
            k0, l0, _ = by_diag[i]
            raise AntiDiagonalClash(
                f"entries ({k0 + 1},{l0 + 1}) and ({k + 1},{l + 1}) share anti-diagonal {i + 1}")
        by_diag[i] = (k, l, x)
    if len(nz) != p + q - 1:
        raise NotConnected(f"{len(nz)} nonzero transition numbers, a connected graph needs {p + q - 1}")
    edges = [Edge(*by_diag[i]) for i in range(p + q - 1)]
    if (edges[0].k, edges[0].l) != (0, 0):
        raise NotConnected("path does not start at (1,1)")
    for e0, e1 in zip(edges, edges[1:]):
        step = (e1.k - e0.k, e1.l - e0.l)
        if step not in ((1, 0), (0, 1)):
            raise NotConnected(
                f"entries ({e0.k + 1},{e0.l + 1}) and ({e1.k + 1},{e1.l + 1}) are not a right or down step")
    return PathTree(p, q, tuple(edges))


def incidence_matrix(tree: PathTree) -> np.ndarray:
    B = np.zeros((tree.vertex_count, tree.n_edges), dtype=np.int64)
    for i in range(tree.n_edges):
        va, vb = tree.endpoints(i)
        B[va, i] = 1
        B[vb, i] = 1
    return B


def interaction_matrix(tree: PathTree):
    """Return ``(A, B)``; A has 1 on the diagonal and 1/2 for edges sharing a vertex.

    The identity ``2A = B^T B`` is checked in integer arithmetic.
    """
    M = tree.n_edges
    A = np.eye(M)
    for i, ei in enumerate(tree.edges):
        for j, ej in enumerate(tree.edges):
            if i != j and (ei.k == ej.k or ei.l == ej.l):
                A[i, j] = 0.5
    B = incidence_matrix(tree)
    if not np.array_equal((2 * A).astype(np.int64), B.T @ B):
        raise AssertionError("interaction matrix disagrees with the incidence factorization")
    return A, B


def interaction_fractions(tree: PathTree):
    A, _ = interaction_matrix(tree)
    return [[Fraction(int(round(2 * x)), 2) for x in row] for row in A]


def leaf_peel_order(tree: PathTree) -> list:
    """Vertices in an order where each one is a leaf of the tree left after
    removing its predecessors; the last entry is the root.  Ties go to the
    smallest vertex id."""
    adj = {v: set() for v in range(tree.vertex_count)}
    for i in range(tree.n_edges):
        va, vb = tree.endpoints(i)
        adj[va].add(vb)
        adj[vb].add(va)
    order = []
    alive = set(adj)
    while len(alive) > 1:
        leaf = min(v for v in alive if len(adj[v]) == 1)
        (nb,) = adj[leaf]
        adj[nb].discard(leaf)
        adj[leaf].clear()
        alive.discard(leaf)
        order.append(leaf)
    order.extend(alive)
    return order


@dataclass(frozen=True)
class Counts:
    n: int
    nkl: np.ndarray  # p x q integers

    @property
    def n_k(self) -> np.ndarray:
        return self.nkl.sum(axis=1)

    @property
    def m_l(self) -> np.ndarray:
        return self.nkl.sum(axis=0)

    def fractions(self) -> np.ndarray:
        return self.nkl / self.n


def finite_counts(m: TransitionMatrix, n: int, mode: str = "strict") -> Counts:
    """Path counts n_{k,l} = n t_{k,l}.

    ``mode="strict"`` requires every n t_{k,l} to be an integer.
    ``mode="largest-remainder"`` rounds by the largest-remainder rule (ties to
    the earliest entry in row-major order) and keeps the nonzero pattern.
    """
    if n < 1:
        raise ValueError("n must be positive")
    p, q = m.shape
    exact = [[m[k, l] * n for l in range(q)] for k in range(p)]
    if mode == "strict":
        bad = [(k, l) for k in range(p) for l in range(q) if exact[k][l].denominator != 1]
        if bad:
            k, l = bad[0]
            raise NonIntegerCounts(f"n*t[{k + 1},{l + 1}] = {exact[k][l]} is not an integer")
        nkl = np.array([[int(x) for x in row] for row in exact], dtype=np.int64)
    elif mode == "largest-remainder":
        floors = [[x.numerator // x.denominator for x in row] for row in exact]
        short = n - sum(map(sum, floors))
        rema = sorted(((exact[k][l] - floors[k][l], -(k * q + l), k, l)
                       for k in range(p) for l in range(q)), reverse=True)
        for _, _, k, l in rema[:short]:
            floors[k][l] += 1
        nkl = np.array(floors, dtype=np.int64)
        lost = [(k, l) for k, l, _ in m.nonzeros() if nkl[k, l] == 0]
        if lost:
            raise NonIntegerCounts(f"n={n} too small: rounding empties entries {lost}")
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    return Counts(n, nkl)
