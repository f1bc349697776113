"""Finite-dimensional VE-spaces: coefficient spaces with a Z-valued gramian.

A space of dimension d over a value space with block size m is stored through
the flattened (d*m) x (d*m) complex Gram matrix whose (i, j) block embeds the
gramian of the i-th and j-th basis vectors.  Positivity is certified by the
flattened PSD test (sufficient, and exact in the scalar case); strictness is
equivalent to nonsingularity of the blockwise partial trace of the flattened
Gram, which is checked by exact linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._linalg import (
    DEFAULT_TOL,
    ELEMENTARY_SAMPLES,
    as_complex,
    block_diag,
    block_of,
    eigh_sorted,
    frozen,
    herm_residual,
    inflate,
    partial_trace,
    spec_norm,
)
from .errors import DegenerateGram, DescriptorMismatch, NotAModule, ShapeMismatch, SpaceMismatch
from .ordered_space import MatrixAlg, OrderedSpaceDescriptor, Scalar, ZElement, in_cone, unembed


@dataclass(frozen=True)
class ModuleStructure:
    """Right action of a matrix algebra on the coefficient space.

    ``right_action[p, q]`` is the d x d coefficient matrix of acting with the
    matrix unit E_pq on the right.
    """

    algebra: MatrixAlg
    right_action: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "right_action", frozen(self.right_action))

    def action_of(self, a) -> np.ndarray:
        """Coefficient matrix of the right action of an algebra element."""
        a = as_complex(a)
        m = self.algebra.m
        if a.shape != (m, m):
            raise ShapeMismatch(f"algebra element must be {m}x{m}")
        return np.einsum("pq,pqij->ij", a, self.right_action)


class VESpace:
    """A VE-space over a concrete ordered *-space.

    Parameters
    ----------
    z : descriptor of the value space of the gramian.
    flat_gram : (dim*m, dim*m) complex array, m = z.block_size.
    module_over : optional right-module structure over a matrix algebra;
        requires z to be that same algebra.
    require_strict : reject gramians whose strictness fails.  Only the
        quotient constructions are allowed to handle degenerate pairings.
    """

    def __init__(
        self,
        z: OrderedSpaceDescriptor,
        flat_gram,
        module_over: Optional[ModuleStructure] = None,
        tol: float = DEFAULT_TOL,
        require_strict: bool = True,
    ):
        self.z = z
        m = z.block_size
        g = frozen(np.atleast_2d(as_complex(flat_gram)))
        if g.shape[0] != g.shape[1] or g.shape[0] % m:
            raise ShapeMismatch(f"flat gram shape {g.shape} incompatible with block size {m}")
        self.flat_gram = g
        self.dim = g.shape[0] // m
        self.module_over = module_over
        scale = max(spec_norm(g), 1.0)
        if herm_residual(g) > tol * scale:
            raise DegenerateGram("gramian is not Hermitian")
        if g.shape[0] and float(np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0]) < -tol * scale:
            raise DegenerateGram("gramian is not positive semidefinite")
        self._partial = frozen(partial_trace(g, m))
        if require_strict and not self.is_strict(tol):
            raise DegenerateGram("gramian is not strict")
        if module_over is not None:
            if z != module_over.algebra:
                raise NotAModule("module flavor requires the gramian valued in the acting algebra")
            if module_over.right_action.shape != (m, m, self.dim, self.dim):
                raise ShapeMismatch("right-action tensor has wrong shape")

    @property
    def block_size(self) -> int:
        return self.z.block_size

    def is_strict(self, tol: float = DEFAULT_TOL) -> bool:
        b = self._partial
        if b.shape[0] == 0:
            return True
        w = np.linalg.eigvalsh(0.5 * (b + b.conj().T))
        return float(w[0]) > tol * max(float(w[-1]), 1.0)

    def gram_block(self, i: int, j: int) -> ZElement:
        return unembed(self.z, block_of(self.flat_gram, self.block_size, i, j))

    def vector(self, coeffs) -> "Vector":
        return Vector(self, coeffs)

    def zero_vector(self) -> "Vector":
        return Vector(self, np.zeros(self.dim))

    def basis_vector(self, i: int) -> "Vector":
        c = np.zeros(self.dim)
        c[i] = 1.0
        return Vector(self, c)

    def __eq__(self, other):
        return (
            isinstance(other, VESpace)
            and self.z == other.z
            and self.dim == other.dim
            and np.array_equal(self.flat_gram, other.flat_gram)
        )

    def __hash__(self):
        return hash((self.z, self.dim))

    def __repr__(self):
        tag = " module" if self.module_over is not None else ""
        return f"VESpace(z={self.z!r}, dim={self.dim}{tag})"


@dataclass(frozen=True)
class Vector:
    """A coefficient vector of a VE-space."""

    space: VESpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = frozen(np.ravel(as_complex(self.coeffs)))
        if c.shape != (self.space.dim,):
            raise ShapeMismatch(f"expected {self.space.dim} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other: "Vector") -> "Vector":
        _same_space(self, other)
        return Vector(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "Vector") -> "Vector":
        _same_space(self, other)
        return Vector(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "Vector":
        return Vector(self.space, self.coeffs * complex(scalar))

    __rmul__ = __mul__


def _same_space(x: Vector, y: Vector) -> None:
    if x.space != y.space:
        raise SpaceMismatch("vectors belong to different spaces")


def gramian(x: Vector, y: Vector) -> ZElement:
    """The Z-valued inner product; conjugate-linear in x, linear in y."""
    _same_space(x, y)
    sp = x.space
    m = sp.block_size
    xi = inflate(x.coeffs.reshape(-1, 1), m)
    yi = inflate(y.coeffs.reshape(-1, 1), m)
    return unembed(sp.z, xi.conj().T @ sp.flat_gram @ yi)


def flat_pairing(flat_gram: np.ndarray, m: int, x, y) -> np.ndarray:
    """Embedded pairing of two coefficient vectors against a raw flattened
    Gram matrix; used where degenerate pairings must be handled."""
    xi = inflate(as_complex(x).reshape(-1, 1), m)
    yi = inflate(as_complex(y).reshape(-1, 1), m)
    return xi.conj().T @ flat_gram @ yi


@dataclass(frozen=True)
class AxiomReport:
    hermitian_residual: float
    positivity_margin: float
    strict: bool
    strictness_witness: Optional[np.ndarray]
    mode: str
    scale: float

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return (
            self.hermitian_residual <= tol * self.scale
            and self.positivity_margin >= -tol * self.scale
            and self.strict
        )


def check_axioms(space: VESpace, tol: float = DEFAULT_TOL, mode: str = "flattened", rng=None) -> AxiomReport:
    """Verify Hermitian block symmetry, positivity and strictness.

    ``mode="flattened"`` runs the sufficient PSD test on the flattened Gram;
    ``mode="elementary"`` additionally samples random coefficient directions
    and tests cone membership of the resulting gramians (probabilistic).
    """
    g = space.flat_gram
    m = space.block_size
    scale = max(spec_norm(g), 1.0)
    hres = herm_residual(g)
    if g.shape[0]:
        margin = float(np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0])
    else:
        margin = 0.0
    if mode == "elementary":
        rng = rng or np.random.default_rng(0)
        for _ in range(ELEMENTARY_SAMPLES):
            x = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
            z = unembed(space.z, flat_pairing(g, m, x, x))
            if not in_cone(z, tol):
                margin = min(margin, -z.norm())
                break
    elif mode != "flattened":
        raise ValueError(f"unknown mode {mode!r}")
    b = partial_trace(g, m)
    witness = None
    strict = True
    if b.shape[0]:
        w, v = np.linalg.eigh(0.5 * (b + b.conj().T))
        if float(w[0]) <= tol * max(float(w[-1]), 1.0):
            strict = False
            witness = v[:, 0]
    return AxiomReport(hres, margin, strict, witness, mode, scale)


_POLAR_WEIGHTS = [1.0, -1.0j, -1.0, 1.0j]  # conjugated powers of i


def polarisation_check(space: VESpace, x: Vector, y: Vector) -> float:
    """Residual of the polarisation identity recovering [x, y] from the
    quadratic map.  With the gramian linear in its second variable the
    correct weights are the conjugated fourth roots of unity."""
    _same_space(x, y)
    if x.space != space:
        raise SpaceMismatch("vectors do not belong to the given space")
    lhs = 4.0 * gramian(x, y).embed()
    acc = np.zeros_like(lhs)
    for k, w in enumerate(_POLAR_WEIGHTS):
        s = x + (1j) ** k * y
        acc = acc + w * gramian(s, s).embed()
    return spec_norm(lhs - acc)


def polarisation_residual_flat(flat_gram: np.ndarray, m: int, x, y) -> float:
    """Polarisation residual against a raw pairing matrix; valid for any
    Hermitian sesquilinear pairing, positive or not."""
    lhs = 4.0 * flat_pairing(flat_gram, m, x, y)
    acc = np.zeros_like(lhs)
    x = as_complex(x)
    y = as_complex(y)
    for k, w in enumerate(_POLAR_WEIGHTS):
        s = x + (1j) ** k * y
        acc = acc + w * flat_pairing(flat_gram, m, s, s)
    return spec_norm(lhs - acc)


def direct_sum(spaces: Sequence[VESpace]) -> VESpace:
    """Direct sum with the block-diagonal gramian."""
    spaces = list(spaces)
    if not spaces:
        raise DescriptorMismatch("direct_sum needs at least one summand")
    z = spaces[0].z
    for s in spaces[1:]:
        if s.z != z:
            raise DescriptorMismatch("summands live over different ordered *-spaces")
    return VESpace(z, block_diag(*[s.flat_gram for s in spaces]))


def tensor_with_ip_space(n: int, e: VESpace) -> VESpace:
    """Tensor with the standard n-dimensional inner-product space:
    [h (x) e, l (x) f] = <h, l> [e, f]."""
    if n < 1:
        raise ShapeMismatch("n must be positive")
    return VESpace(e.z, np.kron(np.eye(n), e.flat_gram))


def module_action(x: Vector, a: ZElement) -> Vector:
    """Right action x . a for a VE-module; a must live in the acting algebra."""
    ms = x.space.module_over
    if ms is None:
        raise NotAModule("this space carries no module structure")
    if a.descriptor != ms.algebra:
        raise DescriptorMismatch("acting element lives in a different algebra")
    return Vector(x.space, ms.action_of(a.payload) @ x.coeffs)


def module_axioms_check(space: VESpace, tol: float = DEFAULT_TOL) -> float:
    """Max residual of [e_i, e_j . E_pq] = [e_i, e_j] E_pq over all basis
    vectors and matrix units."""
    ms = space.module_over
    if ms is None:
        raise NotAModule("this space carries no module structure")
    m = space.block_size
    g = space.flat_gram
    worst = 0.0
    for p in range(m):
        for q in range(m):
            act = inflate(ms.right_action[p, q], m)
            lhs = g @ act
            unit = np.zeros((m, m), dtype=complex)
            unit[p, q] = 1.0
            rhs = g @ np.kron(np.eye(space.dim), unit)
            worst = max(worst, spec_norm(lhs - rhs))
    return worst


def hilbert_space(d: int) -> VESpace:
    """The scalar VE-space with the standard orthonormal gramian."""
    return VESpace(Scalar(), np.eye(d))


def matrix_module_space(m: int) -> VESpace:
    """m x m matrices as a VE-module over MatrixAlg(m) with [a, b] = a* b and
    the right multiplication action.  Basis: matrix units in row-major order."""
    d = m * m
    flat = np.zeros((d * m, d * m), dtype=complex)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                for l in range(m):
                    # (E_ij)* E_kl = delta_ik E_jl
                    if i == k:
                        b1 = i * m + j
                        b2 = k * m + l
                        flat[b1 * m + j, b2 * m + l] = 1.0
    action = np.zeros((m, m, d, d), dtype=complex)
    for p in range(m):
        for q in range(m):
            for i in range(m):
                # E_ij E_pq = delta_jp E_iq
                action[p, q, i * m + q, i * m + p] = 1.0
    ms = ModuleStructure(MatrixAlg(m), action)
    return VESpace(MatrixAlg(m), flat, module_over=ms)
