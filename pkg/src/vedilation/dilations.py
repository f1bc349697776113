"""Dilations derived from the linearisation machinery.

Positive semidefinite maps on a finite *-semigroup dilate through the kernel
they induce on the semigroup acting on itself by left multiplication.  For
finite-dimensional *-algebras the construction is run directly on the basis:
generators are basis-by-value pairs, the representation acts by structure
constants, and the unit vector supplies the dilating operator.  Module
structure on the value space is certified after the fact rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ._linalg import DEFAULT_TOL, as_complex, frozen, herm, herm_residual, inflate, spec_norm
from .errors import (
    ModuleViolation,
    NonAssociative,
    NotAModule,
    NotPSD,
    ShapeMismatch,
)
from .kernels import OperatorKernel, psd_witness
from .linearise import GeneratorQuotient, InvariantLinearisation, construct, verify
from .operators import solve_adjoint
from .star_semigroup import SemigroupAction, StarSemigroup, left_multiplication_action
from .ve_space import ModuleStructure, VESpace, module_axioms_check


@dataclass(frozen=True)
class PsdSemigroupMap:
    """A map from a finite *-semigroup into operators on a VE-space."""

    semigroup: StarSemigroup
    h: VESpace
    phi: Dict[object, np.ndarray]

    def __post_init__(self):
        clean = {}
        for el in self.semigroup.elements:
            if el not in self.phi:
                raise ShapeMismatch(f"phi is missing the element {el!r}")
            mat = frozen(as_complex(self.phi[el]))
            if mat.shape != (self.h.dim, self.h.dim):
                raise ShapeMismatch("phi values must be endomorphism matrices of the value space")
            clean[el] = mat
        object.__setattr__(self, "phi", clean)

    def induced_kernel(self, tol: float = DEFAULT_TOL) -> OperatorKernel:
        """k(alpha, beta) = phi(alpha* beta) on the semigroup itself."""
        sg = self.semigroup
        n = sg.order
        d = self.h.dim
        blocks = np.empty((n, n, d, d), dtype=complex)
        for a in range(n):
            sa = sg.star[a]
            for b in range(n):
                blocks[a, b] = self.phi[sg.elements[sg.mul[sa, b]]]
        return OperatorKernel(sg.elements, self.h, blocks, tol)


@dataclass
class DilationTriple:
    """A dilated space with a *-representation and the factoring operator.

    ``w`` is None for semigroups without a unit, in which case the point maps
    ``v`` carry the factorisation on products alone.
    """

    space: VESpace
    pi: Dict[object, np.ndarray]
    v: Dict[object, np.ndarray]
    w: Optional[np.ndarray]
    residuals: Dict[str, float]
    quotient: GeneratorQuotient
    h: VESpace
    linearisation: Optional[InvariantLinearisation] = None

    @property
    def dim(self) -> int:
        return self.space.dim

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def ok(self, tol: float = DEFAULT_TOL, scale: float = 1.0) -> bool:
        return self.max_residual() <= tol * max(scale, 1.0)


def sznagy_dilate(m: PsdSemigroupMap, tol: float = DEFAULT_TOL) -> DilationTriple:
    """Dilate a positive semidefinite map on a finite *-semigroup.

    Delegates to the kernel linearisation over the left-multiplication
    action.  With a unit, additionally returns W and checks the sandwich
    identity and unitality of the representation.
    """
    k = m.induced_kernel(tol)
    if not _kernel_psd(k, tol):
        eig, wit = psd_witness(k)
        raise NotPSD(eig, wit)
    action = left_multiplication_action(m.semigroup)
    lin = construct(k, action, tol)
    sg = m.semigroup
    residuals = dict(lin.report.residuals()) if lin.report else {}
    scale = max(k.scale(), 1.0)

    # positive-map factorisation and intertwining on products
    adjoints = {el: solve_adjoint(lin.v[el], m.h, lin.space, max(tol, 1e-8)).adjoint_matrix for el in sg.elements}
    fact = 0.0
    for a, al in enumerate(sg.elements):
        for b, be in enumerate(sg.elements):
            prod = sg.elements[sg.mul[sg.star[a], b]]
            fact = max(fact, spec_norm(m.phi[prod] - adjoints[al] @ lin.v[be]))
    residuals["map_factorisation"] = fact

    w = None
    if sg.unit is not None:
        unit_el = sg.elements[sg.unit]
        w = lin.v[unit_el]
        wadj = adjoints[unit_el]
        sandwich = max(
            spec_norm(m.phi[el] - wadj @ lin.pi[el] @ w) for el in sg.elements
        )
        residuals["sandwich"] = sandwich
        residuals["pi_unital"] = spec_norm(lin.pi[unit_el] - np.eye(lin.dim))
    return DilationTriple(
        space=lin.space,
        pi=dict(lin.pi),
        v=dict(lin.v),
        w=w,
        residuals=residuals,
        quotient=lin.quotient,
        h=m.h,
        linearisation=lin,
    )


def _kernel_psd(k: OperatorKernel, tol: float) -> bool:
    full = k.flat_matrix()
    if full.size == 0:
        return True
    scale = max(spec_norm(full), 1.0)
    if herm_residual(full) > tol * scale:
        return False
    return float(np.linalg.eigvalsh(herm(full))[0]) >= -tol * scale


@dataclass(frozen=True)
class FinStarAlgebra:
    """A finite-dimensional *-algebra given by structure constants.

    ``structure[p, q, s]`` is the coefficient of the s-th basis element in
    the product of the p-th and q-th; ``star`` columns hold basis images of
    the involution, which acts on coordinates as ``star @ conj(c)``.
    """

    dim: int
    structure: np.ndarray
    star: np.ndarray
    unit: Optional[np.ndarray] = None

    def __post_init__(self):
        s = frozen(self.structure)
        st = frozen(self.star)
        if s.shape != (self.dim,) * 3 or st.shape != (self.dim, self.dim):
            raise ShapeMismatch("structure tensors have wrong shapes")
        object.__setattr__(self, "structure", s)
        object.__setattr__(self, "star", st)
        if self.unit is not None:
            u = frozen(np.ravel(self.unit))
            if u.shape != (self.dim,):
                raise ShapeMismatch("unit coordinates have wrong length")
            object.__setattr__(self, "unit", u)

    def mul_coeffs(self, a, b) -> np.ndarray:
        return np.einsum("p,q,pqs->s", as_complex(a), as_complex(b), self.structure)

    def star_coeffs(self, a) -> np.ndarray:
        return self.star @ np.conj(as_complex(a))

    def validate(self, tol: float = DEFAULT_TOL):
        """Raise NonAssociative when the structure constants fail any
        *-algebra axiom."""
        s, st = self.structure, self.star
        assoc = np.einsum("pqu,urt->pqrt", s, s) - np.einsum("qru,put->pqrt", s, s)
        if spec_norm(assoc.reshape(self.dim**2, -1)) > tol * max(spec_norm(s.reshape(self.dim, -1)) ** 2, 1.0):
            raise NonAssociative("structure constants are not associative")
        lhs = np.einsum("pqs,ts->pqt", np.conj(s), st)
        rhs = np.einsum("uq,vp,uvt->pqt", st, st, s)
        if spec_norm((lhs - rhs).reshape(self.dim**2, -1)) > tol * max(spec_norm(s.reshape(self.dim, -1)), 1.0):
            raise NonAssociative("involution is not anti-multiplicative")
        if spec_norm(st @ np.conj(st) - np.eye(self.dim)) > tol:
            raise NonAssociative("involution is not involutive")
        if self.unit is not None:
            left = np.einsum("p,pqs->qs", self.unit, s) - np.eye(self.dim)
            right = np.einsum("q,pqs->ps", self.unit, s) - np.eye(self.dim)
            if max(spec_norm(left), spec_norm(right)) > tol:
                raise NonAssociative("unit coordinates fail the unit laws")

    @staticmethod
    def matrix_units(m: int) -> "FinStarAlgebra":
        """The full matrix algebra on the basis of matrix units, row-major."""
        p = m * m
        s = np.zeros((p, p, p))
        st = np.zeros((p, p))
        for i in range(m):
            for j in range(m):
                st[j * m + i, i * m + j] = 1.0
                for k in range(m):
                    for l in range(m):
                        if j == k:
                            s[i * m + j, k * m + l, i * m + l] = 1.0
        unit = np.zeros(p)
        for i in range(m):
            unit[i * m + i] = 1.0
        return FinStarAlgebra(p, s, st, unit)

    @staticmethod
    def scalars() -> "FinStarAlgebra":
        return FinStarAlgebra(1, np.ones((1, 1, 1)), np.eye(1), np.ones(1))


def algebra_kernel(alg: FinStarAlgebra, phi, h: VESpace, tol: float = DEFAULT_TOL) -> OperatorKernel:
    """The basis kernel (p, q) -> phi(a_p* a_q), with phi extended linearly
    from the basis images."""
    phi = as_complex(phi)
    if phi.shape != (alg.dim, h.dim, h.dim):
        raise ShapeMismatch("phi must stack one endomorphism matrix per basis element")
    blocks = np.empty((alg.dim, alg.dim, h.dim, h.dim), dtype=complex)
    for p in range(alg.dim):
        starred = alg.star[:, p]
        for q in range(alg.dim):
            coeffs = np.einsum("r,rs->s", starred, alg.structure[:, q, :])
            blocks[p, q] = np.einsum("s,sij->ij", coeffs, phi)
    return OperatorKernel(tuple(range(alg.dim)), h, blocks, tol)


def stinespring_dilate(alg: FinStarAlgebra, phi, h: VESpace, tol: float = DEFAULT_TOL) -> DilationTriple:
    """Dilate a positive semidefinite linear map on a finite *-algebra.

    The dilation space is the strict quotient of (algebra basis) x (value
    space) under the gramian weighted by phi of starred products; the
    representation acts through structure constants.  With a unit, W embeds
    the value space along the unit and the sandwich identity is checked.
    """
    alg.validate(tol)
    phi = as_complex(phi)
    k = algebra_kernel(alg, phi, h, tol)
    if not _kernel_psd(k, tol):
        eig, wit = psd_witness(k)
        raise NotPSD(eig, wit)
    d = h.dim
    m = h.block_size
    quotient = GeneratorQuotient(k.flat_matrix(), m, tol=tol)
    space = VESpace(h.z, quotient.flat_gram, tol=tol)

    v = {p: quotient.projector[:, p * d : (p + 1) * d] for p in range(alg.dim)}
    pi = {}
    for r in range(alg.dim):
        rel = np.kron(alg.structure[r].T, np.eye(d))
        pi[r] = quotient.push_map(rel, tol)

    residuals: Dict[str, float] = {}
    scale = max(k.scale(), 1.0)
    adjoints = {p: solve_adjoint(v[p], h, space, max(tol, 1e-8)).adjoint_matrix for p in range(alg.dim)}

    fact = 0.0
    for p in range(alg.dim):
        for q in range(alg.dim):
            fact = max(fact, spec_norm(k.blocks[p, q] - adjoints[p] @ v[q]))
    residuals["map_factorisation"] = fact

    inter = 0.0
    mult = 0.0
    star_res = 0.0
    for r in range(alg.dim):
        for q in range(alg.dim):
            target_v = sum(alg.structure[r, q, s] * v[s] for s in range(alg.dim))
            inter = max(inter, spec_norm(target_v - pi[r] @ v[q]))
            target_pi = sum(alg.structure[r, q, s] * pi[s] for s in range(alg.dim))
            mult = max(mult, spec_norm(target_pi - pi[r] @ pi[q]))
        if space.dim:
            pi_adj = solve_adjoint(pi[r], space, space, max(tol, 1e-8)).adjoint_matrix
            starred = sum(alg.star[s, r] * pi[s] for s in range(alg.dim))
            star_res = max(star_res, spec_norm(pi_adj - starred))
    residuals["intertwining"] = inter
    residuals["multiplicativity"] = mult
    residuals["star"] = star_res

    w = None
    if alg.unit is not None:
        w = sum(alg.unit[p] * v[p] for p in range(alg.dim))
        wadj = solve_adjoint(w, h, space, max(tol, 1e-8)).adjoint_matrix
        sandwich = max(
            (spec_norm(phi[p] - wadj @ pi[p] @ w) for p in range(alg.dim)), default=0.0
        )
        residuals["sandwich"] = sandwich
        unit_pi = sum(alg.unit[p] * pi[p] for p in range(alg.dim))
        residuals["pi_unital"] = spec_norm(unit_pi - np.eye(space.dim))
        if space.dim:
            stacked = np.hstack([pi[p] @ w for p in range(alg.dim)])
            sv = np.linalg.svd(stacked, compute_uv=False)
            rank = int(np.sum(sv > max(sv[0], 1.0) * 1e-10)) if sv.size else 0
            residuals["minimality_defect"] = float(space.dim - rank)

    return DilationTriple(
        space=space,
        pi=pi,
        v=v,
        w=None if w is None else frozen(w),
        residuals=residuals,
        quotient=quotient,
        h=h,
    )


def amplification(alg: FinStarAlgebra, phi, n: int):
    """The n-th amplification: the same map applied entrywise to n x n
    matrices over the source algebra, valued in block operators on the
    n-fold direct sum.  Returns (amplified algebra, amplified basis images).
    Basis order: (block row, block column, source basis index)."""
    phi = as_complex(phi)
    p = alg.dim
    d = phi.shape[1]
    if n < 1:
        raise ShapeMismatch("amplification order must be positive")
    big_dim = n * n * p
    s = np.zeros((big_dim, big_dim, big_dim), dtype=complex)
    st = np.zeros((big_dim, big_dim), dtype=complex)
    idx = lambda a, b, t: (a * n + b) * p + t
    for a in range(n):
        for b in range(n):
            for t in range(p):
                for u in range(p):
                    if alg.star[u, t]:
                        st[idx(b, a, u), idx(a, b, t)] = alg.star[u, t]
            for c in range(n):
                for t in range(p):
                    for tt in range(p):
                        coeffs = alg.structure[t, tt]
                        for u in range(p):
                            if coeffs[u]:
                                s[idx(a, b, t), idx(b, c, tt), idx(a, c, u)] += coeffs[u]
    unit = None
    if alg.unit is not None:
        unit = np.zeros(big_dim, dtype=complex)
        for a in range(n):
            for t in range(p):
                unit[idx(a, a, t)] = alg.unit[t]
    big_alg = FinStarAlgebra(big_dim, s, st, unit)
    images = np.zeros((big_dim, n * d, n * d), dtype=complex)
    for a in range(n):
        for b in range(n):
            for t in range(p):
                images[idx(a, b, t), a * d : (a + 1) * d, b * d : (b + 1) * d] = phi[t]
    return big_alg, images


@dataclass(frozen=True)
class ModuleReport:
    gram_module_identity: float
    v_module: float
    pi_module: float
    scale: float

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return max(self.gram_module_identity, self.v_module, self.pi_module) <= tol * max(self.scale, 1.0)


def certify_module(lin: InvariantLinearisation, tol: float = DEFAULT_TOL):
    """Certify that a linearisation of a kernel over a VE-module is itself a
    module: the induced right action descends to the quotient, the gramian is
    linear over it, and the point maps and representation commute with it.

    Returns (module-flavoured dilation space, report)."""
    h = lin.kernel.h
    ms = h.module_over
    if ms is None:
        raise NotAModule("the value space carries no module structure")
    malg = ms.algebra.m
    n = lin.kernel.n_points
    dimk = lin.dim
    k_action = np.zeros((malg, malg, dimk, dimk), dtype=complex)
    for p in range(malg):
        for q in range(malg):
            gen_act = np.kron(np.eye(n), ms.right_action[p, q])
            k_action[p, q] = lin.quotient.push_map(gen_act, tol)
    k_module = VESpace(
        h.z, lin.quotient.flat_gram, module_over=ModuleStructure(ms.algebra, k_action), tol=tol
    )
    gmp = module_axioms_check(k_module, tol)
    v_res = 0.0
    pi_res = 0.0
    for p in range(malg):
        for q in range(malg):
            act_h = ms.right_action[p, q]
            act_k = k_action[p, q]
            for x in lin.kernel.points:
                v_res = max(v_res, spec_norm(lin.v[x] @ act_h - act_k @ lin.v[x]))
            for el in lin.action.semigroup.elements:
                pi_res = max(pi_res, spec_norm(lin.pi[el] @ act_k - act_k @ lin.pi[el]))
    scale = max(lin.kernel.scale(), 1.0)
    return k_module, ModuleReport(gmp, v_res, pi_res, scale)


def module_dilate(k: OperatorKernel, a: SemigroupAction, tol: float = DEFAULT_TOL):
    """Linearise a kernel over a VE-module and certify the module structure
    of the result.  Raises ModuleViolation when certification fails."""
    lin = construct(k, a, tol)
    k_module, report = certify_module(lin, tol)
    if not report.ok(max(tol, 1e-8)):
        raise ModuleViolation(f"module certification failed: {report}")
    return lin, k_module, report


def stinespring_unitary_equivalence(
    t1: DilationTriple, k2_gram: np.ndarray, pi2, w2, tol: float = DEFAULT_TOL
):
    """Unitary witness between a constructed algebra dilation and any other
    minimal triple of the same map, given by raw matrices.

    Returns (U, residual dict); the second triple's space is described by its
    flattened gramian (use the identity for a plain Hilbert space).
    """
    pi2 = as_complex(pi2)
    w2 = as_complex(w2)
    p = pi2.shape[0]
    d = t1.h.dim
    if t1.w is None:
        raise ShapeMismatch("equivalence requires unital triples")
    gen2 = np.hstack([pi2[r] @ w2 for r in range(p)])
    u = gen2 @ t1.quotient.basis
    m = t1.h.block_size
    ui = inflate(u, m)
    iso = spec_norm(ui.conj().T @ inflate(as_complex(k2_gram), m) @ ui - t1.space.flat_gram)
    ipi = max(
        (spec_norm(u @ t1.pi[r] - pi2[r] @ u) for r in range(p)), default=0.0
    )
    iw = spec_norm(u @ t1.w - w2)
    if u.shape[0] != u.shape[1]:
        surj = False
    elif u.shape[0] == 0:
        surj = True
    else:
        sv = np.linalg.svd(u, compute_uv=False)
        surj = bool(sv[-1] > max(sv[0], 1.0) * 1e-8)
    return frozen(u), {
        "isometry": iso,
        "intertwining_pi": ipi,
        "w_transport": iw,
        "surjective": float(not surj),
    }
