"""Operator-valued kernels on a finite point set.

The full flattened matrix of a kernel stacks, per point pair, the flattened
quadratic forms of its blocks against the gramian of the value space; its
positive semidefiniteness is the single decidable test behind n-positivity
for every n.  Selections with repeated points are compressions of the full
matrix, so repetitions add nothing; this reduction is exercised by tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Dict, Optional, Sequence

import numpy as np

from ._linalg import DEFAULT_TOL, as_complex, frozen, herm, herm_residual, inflate, spec_norm
from .errors import NotTwoPositive, ShapeMismatch, SpaceMismatch, UnknownPoint
from .operators import AdjointableOp, loynes_norm, solve_adjoint
from .ordered_space import Scalar, ZElement, unembed, zero
from .ve_space import VESpace, Vector


class OperatorKernel:
    """A kernel on a finite set with values adjointable operators on a
    common VE-space.

    ``blocks[a, b]`` is the operator matrix of the kernel at
    ``(points[a], points[b])``; adjoints of all blocks are solved at
    construction, so values always live in the adjointable algebra.
    """

    def __init__(self, points: Sequence, h: VESpace, blocks, tol: float = DEFAULT_TOL):
        self.points = tuple(points)
        if len(set(self.points)) != len(self.points):
            raise ShapeMismatch("kernel points must be distinct")
        self.h = h
        n = len(self.points)
        d = h.dim
        arr = frozen(as_complex(blocks).reshape(n, n, d, d))
        self.blocks = arr
        adj = np.empty_like(arr)
        for a in range(n):
            for b in range(n):
                adj[a, b] = solve_adjoint(arr[a, b], h, h, tol).adjoint_matrix
        adj.setflags(write=False)
        self.adjoint_blocks = adj
        self._flat: Optional[np.ndarray] = None

    @property
    def n_points(self) -> int:
        return len(self.points)

    def index(self, point) -> int:
        try:
            return self.points.index(point)
        except ValueError:
            raise UnknownPoint(f"{point!r} is not a kernel point") from None

    def block(self, x, y) -> AdjointableOp:
        a, b = self.index(x), self.index(y)
        return AdjointableOp(self.h, self.h, self.blocks[a, b], self.adjoint_blocks[a, b])

    def flat_matrix(self) -> np.ndarray:
        """The full flattened matrix; its (y, x) block is the flattened form
        of the block at (x, y) against the gramian of the value space."""
        if self._flat is None:
            n = self.n_points
            m = self.h.block_size
            dm = self.h.dim * m
            g = self.h.flat_gram
            out = np.empty((n * dm, n * dm), dtype=complex)
            for y in range(n):
                for x in range(n):
                    out[y * dm : (y + 1) * dm, x * dm : (x + 1) * dm] = (
                        inflate(self.blocks[x, y], m).conj().T @ g
                    )
            out.setflags(write=False)
            self._flat = out
        return self._flat

    def scale(self) -> float:
        return max((spec_norm(self.blocks[a, b]) for a in range(self.n_points) for b in range(self.n_points)), default=0.0)

    def map_blocks(self, fn) -> "OperatorKernel":
        n = self.n_points
        out = np.empty_like(self.blocks)
        for a in range(n):
            for b in range(n):
                out[a, b] = fn(a, b)
        return OperatorKernel(self.points, self.h, out)

    def __repr__(self):
        return f"OperatorKernel({self.n_points} points, h={self.h!r})"


@dataclass(frozen=True)
class FinSuppFunction:
    """A finitely supported function from the point set into the value space."""

    space: VESpace
    values: Dict[object, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for point, vec in self.values.items():
            v = frozen(np.ravel(as_complex(vec)))
            if v.shape != (self.space.dim,):
                raise ShapeMismatch("value has wrong dimension")
            clean[point] = v
        object.__setattr__(self, "values", clean)

    @property
    def support(self):
        return tuple(self.values.keys())

    def at(self, point) -> np.ndarray:
        return self.values.get(point, np.zeros(self.space.dim, dtype=complex))


def identity_kernel(points: Sequence, h: VESpace) -> OperatorKernel:
    n = len(tuple(points))
    d = h.dim
    blocks = np.zeros((n, n, d, d), dtype=complex)
    for a in range(n):
        blocks[a, a] = np.eye(d)
    return OperatorKernel(points, h, blocks)


def zero_kernel(points: Sequence, h: VESpace) -> OperatorKernel:
    n = len(tuple(points))
    return OperatorKernel(points, h, np.zeros((n, n, h.dim, h.dim)))


def adjoint_kernel(k: OperatorKernel) -> OperatorKernel:
    """k*(x, y) = k(y, x)*; an involution on kernels."""
    return k.map_blocks(lambda a, b: k.adjoint_blocks[b, a])


def hermitian_residual_kernel(k: OperatorKernel) -> float:
    ks = adjoint_kernel(k)
    return max(
        (spec_norm(k.blocks[a, b] - ks.blocks[a, b]) for a in range(k.n_points) for b in range(k.n_points)),
        default=0.0,
    )


def _flat_psd_margin(mat: np.ndarray):
    """(eigmin, eigvec, scale) of the Hermitian part."""
    if mat.shape[0] == 0:
        return 0.0, None, 1.0
    w, v = np.linalg.eigh(herm(mat))
    scale = max(abs(float(w[0])), abs(float(w[-1])), 1.0)
    return float(w[0]), v[:, 0], scale


def n_positive(k: OperatorKernel, n: int, tol: float = DEFAULT_TOL) -> bool:
    """n-positivity over every multiset of n points (flattened test).

    For n >= the number of points this is the single full-matrix test;
    selections with repetitions are compressions of the full matrix.
    """
    if n < 1:
        raise ValueError("n must be positive")
    full = k.flat_matrix()
    scale = max(spec_norm(full), 1.0)
    if herm_residual(full) > tol * scale:
        return False
    if n >= k.n_points:
        low, _, _ = _flat_psd_margin(full)
        return low >= -tol * scale
    dm = k.h.dim * k.h.block_size
    for sel in combinations_with_replacement(range(k.n_points), n):
        idx = np.concatenate([np.arange(p * dm, (p + 1) * dm) for p in sel])
        low, _, _ = _flat_psd_margin(full[np.ix_(idx, idx)])
        if low < -tol * scale:
            return False
    return True


def positive_semidefinite(k: OperatorKernel, tol: float = DEFAULT_TOL) -> bool:
    """Positivity for all n; equivalent to the full flattened matrix test."""
    return n_positive(k, k.n_points, tol)


def psd_witness(k: OperatorKernel):
    """(eigmin, coefficient table) of the most negative direction of the full
    flattened matrix; the table maps points to value-space coefficient blocks."""
    full = k.flat_matrix()
    low, vec, _ = _flat_psd_margin(full)
    if vec is None:
        return low, {}
    dm = k.h.dim * k.h.block_size
    table = {p: vec[a * dm : (a + 1) * dm] for a, p in enumerate(k.points)}
    return low, table


@dataclass(frozen=True)
class TwoPositiveReport:
    hermitian_residual: float
    zero_diagonal_rows: tuple
    row_propagation_residual: float
    schwarz_margin: Optional[float]
    scale: float

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        fine = self.hermitian_residual <= tol * max(self.scale, 1.0)
        fine = fine and self.row_propagation_residual <= np.sqrt(tol) * max(self.scale, 1.0)
        if self.schwarz_margin is not None:
            fine = fine and self.schwarz_margin <= tol * max(self.scale, 1.0) ** 2
        return fine


def two_positive_consequences(k: OperatorKernel, tol: float = DEFAULT_TOL) -> TwoPositiveReport:
    """Consequences of 2-positivity: the kernel is Hermitian, a vanishing
    diagonal block kills its row, and (scalar regime) the Schwarz inequality
    holds between operator norms."""
    if not n_positive(k, min(2, k.n_points), tol):
        raise NotTwoPositive("kernel is not 2-positive")
    scale = k.scale()
    hres = hermitian_residual_kernel(k)
    norms = np.zeros((k.n_points, k.n_points))
    scalar = isinstance(k.h.z, Scalar)
    if scalar:
        for a in range(k.n_points):
            for b in range(k.n_points):
                op = AdjointableOp(k.h, k.h, k.blocks[a, b], k.adjoint_blocks[a, b])
                norms[a, b] = loynes_norm(op).norm
    else:
        for a in range(k.n_points):
            for b in range(k.n_points):
                norms[a, b] = spec_norm(k.blocks[a, b])
    zero_rows = []
    prop = 0.0
    for a in range(k.n_points):
        if norms[a, a] <= tol * max(scale, 1.0):
            zero_rows.append(k.points[a])
            prop = max(prop, float(np.max(norms[a, :])))
    margin = None
    if scalar:
        margin = max(
            (norms[a, b] ** 2 - norms[a, a] * norms[b, b] for a in range(k.n_points) for b in range(k.n_points)),
            default=0.0,
        )
    return TwoPositiveReport(hres, tuple(zero_rows), prop, margin, scale)


def convolution(k: OperatorKernel, g: FinSuppFunction) -> Dict[object, np.ndarray]:
    """(Kg)(y) = sum_x k(y, x) g(x), returned as a full table over the points."""
    if g.space != k.h:
        raise SpaceMismatch("function values live in a different space")
    out = {}
    for y in range(k.n_points):
        acc = np.zeros(k.h.dim, dtype=complex)
        for x, vec in g.values.items():
            acc = acc + k.blocks[y, k.index(x)] @ vec
        out[k.points[y]] = acc
    return out


def pairing_f0(space: VESpace, g: FinSuppFunction, h: FinSuppFunction) -> ZElement:
    """Pointwise-summed gramian pairing of two finitely supported functions."""
    if g.space != space or h.space != space:
        raise SpaceMismatch("functions live in a different space")
    acc = zero(space.z)
    for point in set(g.support) | set(h.support):
        acc = acc + _gram(space, g.at(point), h.at(point))
    return acc


def pairing_k(k: OperatorKernel, g: FinSuppFunction, h: FinSuppFunction) -> ZElement:
    """Kernel-weighted pairing; equals the plain pairing of Kg against h."""
    if g.space != k.h or h.space != k.h:
        raise SpaceMismatch("functions live in a different space")
    acc = zero(k.h.z)
    for y in range(k.n_points):
        hy = h.at(k.points[y])
        if not np.any(hy):
            continue
        for x, vec in g.values.items():
            acc = acc + _gram(k.h, k.blocks[y, k.index(x)] @ vec, hy)
    return acc


def _gram(space: VESpace, u, v) -> ZElement:
    from .ve_space import gramian

    return gramian(Vector(space, u), Vector(space, v))
