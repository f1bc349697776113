"""Adjointable operators between VE-spaces.

Adjoints are solved from the flattened identity
``(T (x) I)^H G_cod = G_dom (S (x) I)``; the solver parametrises directly by
the coefficient matrix S, so any least-squares solution automatically carries
the required Kronecker block structure, and a residual threshold decides
existence.  Norms in the sense of Loynes are computed as generalized
eigenvalue problems restricted to the range of the gramian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._linalg import (
    DEFAULT_TOL,
    ELEMENTARY_SAMPLES,
    as_complex,
    frozen,
    generalized_eig_range,
    herm,
    inflate,
    lstsq,
    max_generalized_eig,
    spec_norm,
)
from .errors import DegenerateGram, NotAdjointable, NotSelfadjoint, ShapeMismatch, SpaceMismatch
from .ordered_space import Scalar, unembed
from .ve_space import VESpace, Vector, direct_sum, flat_pairing, in_cone


class AdjointableOp:
    """A linear operator with a solved adjoint between two VE-spaces."""

    __slots__ = ("domain", "codomain", "matrix", "adjoint_matrix", "residual")

    def __init__(self, domain: VESpace, codomain: VESpace, matrix, adjoint_matrix, residual: float = 0.0):
        self.domain = domain
        self.codomain = codomain
        self.matrix = frozen(np.atleast_2d(as_complex(matrix)))
        self.adjoint_matrix = frozen(np.atleast_2d(as_complex(adjoint_matrix)))
        if self.matrix.shape != (codomain.dim, domain.dim):
            raise ShapeMismatch(f"operator matrix {self.matrix.shape} vs {(codomain.dim, domain.dim)}")
        if self.adjoint_matrix.shape != (domain.dim, codomain.dim):
            raise ShapeMismatch("adjoint matrix has wrong shape")
        self.residual = float(residual)

    def adjoint(self) -> "AdjointableOp":
        return AdjointableOp(self.codomain, self.domain, self.adjoint_matrix, self.matrix, self.residual)

    def apply(self, x: Vector) -> Vector:
        if x.space != self.domain:
            raise SpaceMismatch("vector not in the domain")
        return Vector(self.codomain, self.matrix @ x.coeffs)

    def is_endomorphism(self) -> bool:
        return self.domain == self.codomain

    def __matmul__(self, other: "AdjointableOp") -> "AdjointableOp":
        if other.codomain != self.domain:
            raise SpaceMismatch("composition domain mismatch")
        return AdjointableOp(
            other.domain,
            self.codomain,
            self.matrix @ other.matrix,
            other.adjoint_matrix @ self.adjoint_matrix,
        )

    def __add__(self, other: "AdjointableOp") -> "AdjointableOp":
        if other.domain != self.domain or other.codomain != self.codomain:
            raise SpaceMismatch("sum of operators with different spaces")
        return AdjointableOp(
            self.domain, self.codomain, self.matrix + other.matrix, self.adjoint_matrix + other.adjoint_matrix
        )

    def __mul__(self, scalar) -> "AdjointableOp":
        s = complex(scalar)
        return AdjointableOp(self.domain, self.codomain, s * self.matrix, np.conj(s) * self.adjoint_matrix)

    __rmul__ = __mul__

    def __sub__(self, other: "AdjointableOp") -> "AdjointableOp":
        return self + (-1.0) * other

    def __repr__(self):
        return f"AdjointableOp({self.codomain.dim}x{self.domain.dim})"


def _adjoint_system(dom: VESpace):
    """Columns of the linear map S -> vec(G_dom (S (x) I)) grouped per basis
    coefficient of S."""
    m = dom.block_size
    g = dom.flat_gram
    cols = [g[:, i * m : (i + 1) * m].reshape(-1) for i in range(dom.dim)]
    if not cols:
        return np.zeros((g.shape[0] * m, 0), dtype=complex)
    return np.stack(cols, axis=1)


def solve_adjoint(matrix, dom: VESpace, cod: VESpace, tol: float = DEFAULT_TOL) -> AdjointableOp:
    """Solve for the adjoint of ``matrix : dom -> cod``.

    Raises NotAdjointable with the attained residual when no coefficient
    matrix satisfies the defining identity within tolerance, and
    DegenerateGram when either gramian fails strictness (adjoints are only
    solved against strict gramians outside the quotient constructions).
    """
    if dom.z != cod.z:
        raise SpaceMismatch("domain and codomain live over different ordered *-spaces")
    if not dom.is_strict(tol) or not cod.is_strict(tol):
        raise DegenerateGram("adjoints are solved on strict gramians only")
    t = np.atleast_2d(as_complex(matrix))
    if t.shape != (cod.dim, dom.dim):
        raise ShapeMismatch(f"matrix {t.shape}, expected {(cod.dim, dom.dim)}")
    m = dom.block_size
    lhs = inflate(t, m).conj().T @ cod.flat_gram  # (dom.dim*m, cod.dim*m)
    a = _adjoint_system(dom)
    b = np.stack(
        [lhs[:, j * m : (j + 1) * m].reshape(-1) for j in range(cod.dim)], axis=1
    ) if cod.dim else np.zeros((a.shape[0], 0), dtype=complex)
    s = lstsq(a, b)
    attained = spec_norm(dom.flat_gram @ inflate(s, m) - lhs)
    scale = max(spec_norm(t) * max(spec_norm(dom.flat_gram), spec_norm(cod.flat_gram)), 1.0)
    if attained > tol * scale:
        raise NotAdjointable(attained)
    return AdjointableOp(dom, cod, t, s, attained)


def identity(space: VESpace) -> AdjointableOp:
    return AdjointableOp(space, space, np.eye(space.dim), np.eye(space.dim))


def zero_op(dom: VESpace, cod: VESpace) -> AdjointableOp:
    return AdjointableOp(dom, cod, np.zeros((cod.dim, dom.dim)), np.zeros((dom.dim, cod.dim)))


def adjointable_basis(space: VESpace, tol: float = DEFAULT_TOL) -> list[AdjointableOp]:
    """A basis of the *-algebra of adjointable endomorphisms.

    The defining identity is complex-linear in (conj(T), S); its null space
    is computed by one SVD.  On spaces with few adjointable operators the
    returned list is correspondingly short.
    """
    d = space.dim
    m = space.block_size
    g = space.flat_gram
    if d == 0:
        return []
    rows = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1.0
            # contribution of conj(T)_ij: (T^H (x) I) G has T^H = conj(T)^T
            rows.append((inflate(e.T, m) @ g).reshape(-1))
    cols_t = np.stack(rows, axis=1)
    cols_s = -_adjoint_system_full(space)
    big = np.concatenate([cols_t, cols_s], axis=1)
    _, sv, vh = np.linalg.svd(big)
    rank_tol = max(sv[0], 1.0) * 1e-10 if sv.size else 0.0
    null = vh[np.sum(sv > rank_tol) :].conj().T
    ops = []
    for k in range(null.shape[1]):
        u = null[:, k]
        t = np.conj(u[: d * d].reshape(d, d))
        s = u[d * d :].reshape(d, d)
        n = max(spec_norm(t), 1e-30)
        ops.append(AdjointableOp(space, space, t / n, s / n))
    return ops


def _adjoint_system_full(space: VESpace):
    d = space.dim
    m = space.block_size
    g = space.flat_gram
    cols = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1.0
            cols.append((g @ inflate(e, m)).reshape(-1))
    return np.stack(cols, axis=1)


def is_positive(a: AdjointableOp, tol: float = DEFAULT_TOL, mode: str = "flattened", rng=None) -> bool:
    """Positivity of an endomorphism: [Ae, e] in the cone for all e.

    The flattened test (Hermitian and PSD form matrix) is sufficient, and
    exact over scalars; ``mode="elementary"`` instead samples random
    directions, a probabilistic necessary check.
    """
    if not a.is_endomorphism():
        raise SpaceMismatch("positivity is defined for endomorphisms")
    sp = a.domain
    m = sp.block_size
    form = inflate(a.matrix, m).conj().T @ sp.flat_gram
    scale = max(spec_norm(form), 1.0)
    if mode == "flattened":
        if spec_norm(form - form.conj().T) > tol * scale:
            return False
        ok = float(np.linalg.eigvalsh(herm(form))[0]) >= -tol * scale if form.size else True
        if ok:
            # positive operators are selfadjoint; surface violations loudly
            sres = spec_norm(a.matrix - a.adjoint_matrix)
            if sres > max(tol, 1e3 * a.residual) * max(spec_norm(a.matrix), 1.0) * 10:
                raise NotSelfadjoint(f"positive verdict with selfadjointness residual {sres:.3e}")
        return ok
    if mode == "elementary":
        rng = rng or np.random.default_rng(0)
        for _ in range(ELEMENTARY_SAMPLES):
            x = rng.standard_normal(sp.dim) + 1j * rng.standard_normal(sp.dim)
            z = unembed(sp.z, flat_pairing(form, m, x, x))
            if not in_cone(z, tol):
                return False
        return True
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class OpNormCertificate:
    """A bound mu with [Ah, Ah] <= mu [h, h] for all tested h.

    ``mode="flattened"`` certifies the matrix inequality on the whole
    flattened space (an upper bound for the elementary definition; equal to
    it over scalars). ``mode="elementary-sampled"`` reports the largest ratio
    over sampled directions, a lower bound.
    """

    op: AdjointableOp
    mu: float
    mode: str

    @property
    def norm(self) -> float:
        return float(np.sqrt(max(self.mu, 0.0)))


def loynes_norm(a: AdjointableOp, mode: str = "flattened", rng=None) -> OpNormCertificate:
    """Least mu with mu*G_dom - (A (x) I)^H G_cod (A (x) I) PSD (flattened
    mode), via a generalized eigenvalue computation on range(G_dom)."""
    dom, cod = a.domain, a.codomain
    if dom.z != cod.z:
        raise SpaceMismatch("norms need a common ordered *-space")
    if not dom.is_strict() or not cod.is_strict():
        raise DegenerateGram("Loynes norms are defined against strict gramians")
    m = dom.block_size
    lifted = inflate(a.matrix, m)
    quad = lifted.conj().T @ cod.flat_gram @ lifted
    if mode == "flattened":
        mu = max(max_generalized_eig(quad, dom.flat_gram), 0.0)
        return OpNormCertificate(a, float(mu), "flattened")
    if mode == "elementary":
        rng = rng or np.random.default_rng(0)
        mu = 0.0
        for _ in range(ELEMENTARY_SAMPLES):
            x = rng.standard_normal(dom.dim) + 1j * rng.standard_normal(dom.dim)
            num = flat_pairing(quad, m, x, x)
            den = flat_pairing(dom.flat_gram, m, x, x)
            mu = max(mu, max_generalized_eig(num, den))
        return OpNormCertificate(a, float(mu), "elementary-sampled")
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    upper: float
    norm: float
    sineg_residual: float
    norm_identity_residual: float

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        s = max(abs(self.lower), abs(self.upper), 1.0)
        return self.sineg_residual <= tol * s and self.norm_identity_residual <= tol * s


def selfadjoint_bounds_check(a: AdjointableOp, tol: float = DEFAULT_TOL) -> SandwichReport:
    """Sandwich constants of a selfadjoint operator in the scalar regime.

    Finds the extremal constants (lower, upper) of the quadratic form
    against the gramian, checks them against the Loynes norm, and checks
    that the norm equals max(|lower|, |upper|).
    """
    if not a.is_endomorphism():
        raise SpaceMismatch("bounds are defined for endomorphisms")
    sp = a.domain
    if not isinstance(sp.z, Scalar):
        raise SpaceMismatch("exact sandwich bounds are asserted in the scalar regime only")
    scale = max(spec_norm(a.matrix), 1.0)
    if spec_norm(a.matrix - a.adjoint_matrix) > tol * scale * 10:
        raise NotSelfadjoint("operator is not selfadjoint to tolerance")
    form = herm(a.matrix.conj().T @ sp.flat_gram)
    eigs = generalized_eig_range(form, sp.flat_gram)
    lower = float(eigs[0]) if eigs.size else 0.0
    upper = float(eigs[-1]) if eigs.size else 0.0
    norm = loynes_norm(a).norm
    sineg = max(0.0, -(norm - upper), -(norm + lower))
    ident = abs(norm - max(abs(lower), abs(upper)))
    return SandwichReport(lower, upper, norm, sineg, ident)


def amplify(ops: Sequence[Sequence[AdjointableOp]]) -> AdjointableOp:
    """Assemble an N x N grid of operators on a common space E into one
    operator on the N-fold direct sum; the adjoint is the transposed grid of
    adjoints."""
    grid = [list(row) for row in ops]
    n = len(grid)
    if n == 0 or any(len(row) != n for row in grid):
        raise ShapeMismatch("amplify needs a square grid")
    e = grid[0][0].domain
    for row in grid:
        for op in row:
            if op.domain != e or op.codomain != e:
                raise ShapeMismatch("all grid entries must be endomorphisms of one space")
    big = direct_sum([e] * n)
    d = e.dim
    mat = np.zeros((n * d, n * d), dtype=complex)
    adj = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        for j in range(n):
            mat[i * d : (i + 1) * d, j * d : (j + 1) * d] = grid[i][j].matrix
            adj[i * d : (i + 1) * d, j * d : (j + 1) * d] = grid[j][i].adjoint_matrix
    return AdjointableOp(big, big, mat, adj)
