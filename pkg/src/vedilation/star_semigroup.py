"""Finite *-semigroups, their actions on finite sets, and kernel invariance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._linalg import DEFAULT_TOL, spec_norm
from .errors import ShapeMismatch, SpaceMismatch
from .kernels import OperatorKernel


@dataclass(frozen=True)
class StarSemigroup:
    """A finite *-semigroup given by explicit tables.

    ``mul[a, b]`` and ``star[a]`` are element indices; ``unit`` is an index
    or None.
    """

    elements: tuple
    mul: np.ndarray
    star: np.ndarray
    unit: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        g = len(self.elements)
        mul = np.asarray(self.mul, dtype=int)
        star = np.asarray(self.star, dtype=int)
        if mul.shape != (g, g) or star.shape != (g,):
            raise ShapeMismatch("semigroup tables have wrong shapes")
        mul.setflags(write=False)
        star.setflags(write=False)
        object.__setattr__(self, "mul", mul)
        object.__setattr__(self, "star", star)

    @property
    def order(self) -> int:
        return len(self.elements)

    def index(self, el) -> int:
        return self.elements.index(el)

    def mul_el(self, a, b):
        return self.elements[self.mul[self.index(a), self.index(b)]]

    def star_el(self, a):
        return self.elements[self.star[self.index(a)]]


@dataclass(frozen=True)
class SemigroupReport:
    associative: bool
    star_antimultiplicative: bool
    star_involutive: bool
    unit_ok: bool
    unit_star_fixed: bool
    witnesses: tuple

    @property
    def ok(self) -> bool:
        return (
            self.associative
            and self.star_antimultiplicative
            and self.star_involutive
            and self.unit_ok
            and self.unit_star_fixed
        )


def validate(sg: StarSemigroup) -> SemigroupReport:
    """Exhaustive check of the table axioms; failures carry witnesses."""
    g = sg.order
    mul, star = sg.mul, sg.star
    witnesses = []
    assoc = True
    for a in range(g):
        for b in range(g):
            for c in range(g):
                if mul[mul[a, b], c] != mul[a, mul[b, c]]:
                    assoc = False
                    witnesses.append(("associativity", sg.elements[a], sg.elements[b], sg.elements[c]))
    anti = True
    for a in range(g):
        for b in range(g):
            if star[mul[a, b]] != mul[star[b], star[a]]:
                anti = False
                witnesses.append(("star-antimultiplicative", sg.elements[a], sg.elements[b]))
    invol = True
    for a in range(g):
        if star[star[a]] != a:
            invol = False
            witnesses.append(("star-involutive", sg.elements[a]))
    unit_ok = True
    unit_star = True
    if sg.unit is not None:
        e = sg.unit
        for a in range(g):
            if mul[e, a] != a or mul[a, e] != a:
                unit_ok = False
                witnesses.append(("unit", sg.elements[a]))
        if star[e] != e:
            unit_star = False
            witnesses.append(("unit-star", sg.elements[e]))
    return SemigroupReport(assoc, anti, invol, unit_ok, unit_star, tuple(witnesses))


@dataclass(frozen=True)
class SemigroupAction:
    """An action table: ``table[xi, x]`` is the index of ``xi . x``."""

    semigroup: StarSemigroup
    points: tuple
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        t = np.asarray(self.table, dtype=int)
        if t.shape != (self.semigroup.order, len(self.points)):
            raise ShapeMismatch("action table has wrong shape")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def act_index(self, xi: int, x: int) -> int:
        return int(self.table[xi, x])

    def act(self, el, point):
        return self.points[self.table[self.semigroup.index(el), self.points.index(point)]]


@dataclass(frozen=True)
class ActionReport:
    compatible: bool
    unital: Optional[bool]
    witnesses: tuple

    @property
    def ok(self) -> bool:
        return self.compatible


def validate_action(a: SemigroupAction) -> ActionReport:
    """Check the action axiom over all pairs and points; flags unitality
    when the semigroup has a unit."""
    sg = a.semigroup
    witnesses = []
    compatible = True
    for al in range(sg.order):
        for be in range(sg.order):
            for x in range(len(a.points)):
                if a.table[al, a.table[be, x]] != a.table[sg.mul[al, be], x]:
                    compatible = False
                    witnesses.append(("action", sg.elements[al], sg.elements[be], a.points[x]))
    unital = None
    if sg.unit is not None:
        unital = all(a.table[sg.unit, x] == x for x in range(len(a.points)))
        if not unital:
            witnesses.append(("unital", sg.elements[sg.unit]))
    return ActionReport(compatible, unital, tuple(witnesses))


def invariance_residual(k: OperatorKernel, a: SemigroupAction):
    """Max block residual of k(y, xi.x) = k(xi*.y, x) and its worst witness."""
    if tuple(k.points) != tuple(a.points):
        raise SpaceMismatch("kernel and action use different point sets")
    sg = a.semigroup
    worst = 0.0
    witness = None
    for xi in range(sg.order):
        xs = sg.star[xi]
        for x in range(k.n_points):
            for y in range(k.n_points):
                lhs = k.blocks[y, a.table[xi, x]]
                rhs = k.blocks[a.table[xs, y], x]
                r = spec_norm(lhs - rhs)
                if r > worst:
                    worst = r
                    witness = (sg.elements[xi], k.points[x], k.points[y])
    return worst, witness


def check_invariance(k: OperatorKernel, a: SemigroupAction, tol: float = DEFAULT_TOL) -> bool:
    res, _ = invariance_residual(k, a)
    return res <= tol * max(k.scale(), 1.0)


# Constructors for the small catalogue used in tests and problem files.

def cyclic_group(n: int) -> StarSemigroup:
    """Z_n with the inverse involution and unit 0."""
    mul = np.fromfunction(lambda a, b: (a + b) % n, (n, n), dtype=int)
    star = np.array([(-a) % n for a in range(n)])
    return StarSemigroup(tuple(range(n)), mul, star, unit=0)


def klein_group() -> StarSemigroup:
    """Z_2 x Z_2 with the identity involution."""
    els = [(0, 0), (0, 1), (1, 0), (1, 1)]
    idx = {e: i for i, e in enumerate(els)}
    mul = np.array([[idx[((a[0] + b[0]) % 2, (a[1] + b[1]) % 2)] for b in els] for a in els])
    star = np.arange(4)
    return StarSemigroup(tuple(els), mul, star, unit=0)


def symmetric_group_s3() -> StarSemigroup:
    """S_3 as permutation tuples with the inverse involution."""
    from itertools import permutations

    els = list(permutations(range(3)))
    idx = {p: i for i, p in enumerate(els)}
    compose = lambda p, q: tuple(p[q[i]] for i in range(3))
    mul = np.array([[idx[compose(p, q)] for q in els] for p in els])
    inv = lambda p: tuple(sorted(range(3), key=lambda i: p[i]))
    star = np.array([idx[inv(p)] for p in els])
    return StarSemigroup(tuple(els), mul, star, unit=idx[(0, 1, 2)])


def semilattice_chain(n: int) -> StarSemigroup:
    """The chain {0 < 1 < ... < n-1} under max, identity involution, unit 0."""
    mul = np.fromfunction(lambda a, b: np.maximum(a, b), (n, n), dtype=int)
    star = np.arange(n)
    return StarSemigroup(tuple(range(n)), mul, star, unit=0)


def left_multiplication_action(sg: StarSemigroup) -> SemigroupAction:
    return SemigroupAction(sg, sg.elements, sg.mul)


def trivial_action(sg: StarSemigroup, points: Sequence) -> SemigroupAction:
    pts = tuple(points)
    table = np.tile(np.arange(len(pts)), (sg.order, 1))
    return SemigroupAction(sg, pts, table)
