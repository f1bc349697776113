"""Minimal invariant linearisations of positive semidefinite kernels.

The working data structure is the span of the functions obtained by planting
value-space basis vectors at single points and convolving with the kernel.
Their pairwise gramians fill the generator Gram matrix, which coincides with
the kernel's full flattened matrix; a strict basis is extracted by
eigendecomposition of its blockwise partial trace, null directions being
discarded after an explicit pairing-to-zero check.  The point map of the
semigroup action becomes a relabelling of generators, pushed to the quotient
after verifying that it preserves null directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ._linalg import (
    DEFAULT_TOL,
    RANK_TOL,
    as_complex,
    frozen,
    herm,
    herm_residual,
    inflate,
    partial_trace,
    spec_norm,
)
from .errors import (
    DegenerateGram,
    DegenerateQuotientFailure,
    HypothesisFails,
    Inequivalent,
    NotInvariant,
    NotPSD,
    ShapeMismatch,
    SpaceMismatch,
)
from .kernels import OperatorKernel, psd_witness
from .operators import solve_adjoint
from .star_semigroup import SemigroupAction, invariance_residual, validate, validate_action
from .ve_space import VESpace


class GeneratorQuotient:
    """Strict quotient of a finite generator family with a possibly
    degenerate flattened Gram matrix.

    ``basis`` maps quotient coordinates to generator coefficients; the
    ``projector`` is its gram-adjoint section: lift-then-project is the
    identity, and projecting preserves all pairings against the surviving
    directions.
    """

    def __init__(self, big_flat, m: int, rank_tol: float = RANK_TOL, tol: float = DEFAULT_TOL):
        big = as_complex(np.atleast_2d(big_flat))
        if big.shape[0] != big.shape[1] or (m and big.shape[0] % m):
            raise ShapeMismatch("flattened generator gram has incompatible shape")
        self.m = m
        self.n_generators = big.shape[0] // m
        scale = max(spec_norm(big), 1.0)
        if herm_residual(big) > tol * scale * 10:
            raise DegenerateQuotientFailure("generator gram is not Hermitian")
        self.big_flat = frozen(herm(big))
        b = partial_trace(self.big_flat, m)
        self.partial = frozen(b)
        w, v = (np.zeros(0), np.zeros((0, 0), dtype=complex)) if b.shape[0] == 0 else np.linalg.eigh(herm(b))
        top = float(w[-1]) if w.size else 0.0
        self.rank_threshold = rank_tol * max(top, 0.0)
        keep = w > self.rank_threshold
        # basis scaling floored at the geometric mean of threshold and top so
        # that near-threshold directions do not amplify assembly noise
        floor = np.sqrt(max(self.rank_threshold * max(top, 0.0), 0.0))
        scales = np.sqrt(np.maximum(w[keep], max(floor, 1e-300)))
        self.basis = frozen(v[:, keep] / scales)
        self.null_basis = frozen(v[:, ~keep])
        self.dim = int(np.sum(keep))
        if self.null_basis.shape[1]:
            res = spec_norm(self.big_flat @ inflate(self.null_basis, m))
            allowed = 10.0 * np.sqrt(max(spec_norm(self.big_flat), 1e-300) * max(self.rank_threshold, 0.0))
            self.null_pairing_residual = res
            if res > max(allowed, tol * scale):
                raise DegenerateQuotientFailure(
                    f"null direction pairs to {res:.3e}, beyond {allowed:.3e}"
                )
        else:
            self.null_pairing_residual = 0.0
        self.projector = frozen(self.basis.conj().T @ self.partial)
        t = inflate(self.basis, m)
        self.flat_gram = frozen(herm(t.conj().T @ self.big_flat @ t))

    def project(self, coeffs) -> np.ndarray:
        """Quotient coordinates of a generator coefficient vector/matrix."""
        return self.projector @ as_complex(coeffs)

    def lift(self, coords) -> np.ndarray:
        """Generator coefficients of quotient coordinates."""
        return self.basis @ as_complex(coords)

    def push_map(self, rel, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Push a generator-coefficient map to the quotient, verifying that
        it maps null directions to null directions."""
        rel = as_complex(rel)
        if self.null_basis.shape[1]:
            moved = rel @ self.null_basis
            res = float(np.real(np.trace(moved.conj().T @ self.partial @ moved)))
            top = max(float(np.linalg.norm(self.partial, 2)), 1.0) if self.partial.size else 1.0
            allowed = np.sqrt(RANK_TOL) * top * max(1.0, spec_norm(rel) ** 2)
            if res > allowed:
                raise DegenerateQuotientFailure(
                    f"relabelling moves a null direction off the null space ({res:.3e})"
                )
        return self.projector @ rel @ self.basis


def relabel_matrix(action: SemigroupAction, d: int, xi: int) -> np.ndarray:
    """Generator-coefficient matrix of relabelling points through ``xi``."""
    n = len(action.points)
    rel = np.zeros((n * d, n * d))
    for x in range(n):
        tx = action.act_index(xi, x)
        rel[tx * d : (tx + 1) * d, x * d : x * d + d] += np.eye(d)
    return rel


class InvariantLinearisation:
    """The constructed triple: quotient space, point maps and representation.

    ``basis`` maps quotient coordinates back to generator coefficients; the
    full quotient object is optional so that a linearisation can be rebuilt
    from certificate data alone.
    """

    def __init__(
        self,
        kernel: OperatorKernel,
        action: SemigroupAction,
        space: VESpace,
        v: Dict[object, np.ndarray],
        pi: Dict[object, np.ndarray],
        basis: np.ndarray,
        quotient: Optional[GeneratorQuotient] = None,
        report: Optional["VerifyReport"] = None,
    ):
        self.kernel = kernel
        self.action = action
        self.space = space
        self.v = {p: frozen(mat) for p, mat in v.items()}
        self.pi = {e: frozen(mat) for e, mat in pi.items()}
        self.basis = frozen(basis)
        self.quotient = quotient
        self.report = report
        self.generators = tuple((p, i) for p in kernel.points for i in range(kernel.h.dim))

    @property
    def dim(self) -> int:
        return self.space.dim

    def evaluation_matrix(self, point) -> np.ndarray:
        """Matrix of evaluating quotient coordinates at a point."""
        k = self.kernel
        x = k.index(point)
        eval_gen = np.hstack([k.blocks[x, b] for b in range(k.n_points)]) if k.n_points else np.zeros((k.h.dim, 0))
        return eval_gen @ self.basis

    def recovered_kernel(self, tol: float = DEFAULT_TOL) -> OperatorKernel:
        """The kernel rebuilt from the factorisation, block by block."""
        k = self.kernel
        adjoints = {p: solve_adjoint(self.v[p], k.h, self.space, tol).adjoint_matrix for p in k.points}
        blocks = np.empty_like(k.blocks)
        for a, x in enumerate(k.points):
            for b, y in enumerate(k.points):
                blocks[a, b] = adjoints[x] @ self.v[y]
        return OperatorKernel(k.points, k.h, blocks, tol)


def construct(
    k: OperatorKernel,
    a: SemigroupAction,
    tol: float = DEFAULT_TOL,
    rank_tol: float = RANK_TOL,
    run_verify: bool = True,
) -> InvariantLinearisation:
    """Build the minimal invariant linearisation of a positive semidefinite
    invariant kernel.

    Raises NotPSD or NotInvariant (with witnesses) when the preconditions
    fail, and DegenerateQuotientFailure when floating point breaks the
    quotient; any residual slack is recorded in the attached report.
    """
    sg_report = validate(a.semigroup)
    if not sg_report.ok:
        raise SpaceMismatch(f"semigroup tables invalid: {sg_report.witnesses[:3]}")
    act_report = validate_action(a)
    if not act_report.ok:
        raise SpaceMismatch(f"action table invalid: {act_report.witnesses[:3]}")
    if tuple(k.points) != tuple(a.points):
        raise SpaceMismatch("kernel and action use different point sets")

    full = k.flat_matrix()
    scale = max(spec_norm(full), 1.0)
    if full.size:
        low = float(np.linalg.eigvalsh(herm(full))[0])
        if herm_residual(full) > tol * scale or low < -tol * scale:
            eig, witness = psd_witness(k)
            raise NotPSD(eig, witness)
    res, witness = invariance_residual(k, a)
    if res > tol * max(k.scale(), 1.0):
        raise NotInvariant(res, witness)

    d = k.h.dim
    m = k.h.block_size
    quotient = GeneratorQuotient(full, m, rank_tol=rank_tol, tol=tol)
    try:
        space = VESpace(k.h.z, quotient.flat_gram, tol=tol)
    except DegenerateGram as exc:
        raise DegenerateQuotientFailure(f"quotient gram rejected: {exc}") from exc

    v = {p: quotient.projector[:, x * d : (x + 1) * d] for x, p in enumerate(k.points)}
    pi = {}
    for gi, el in enumerate(a.semigroup.elements):
        pi[el] = quotient.push_map(relabel_matrix(a, d, gi), tol)

    lin = InvariantLinearisation(k, a, space, v, pi, quotient.basis, quotient=quotient)
    if run_verify:
        lin.report = verify(lin, tol)
    return lin


@dataclass(frozen=True)
class VerifyReport:
    factorisation: float
    multiplicativity: float
    star: float
    intertwining: float
    evaluation: float
    minimality_rank: int
    dim: int
    scale: float

    def residuals(self) -> Dict[str, float]:
        return {
            "factorisation": self.factorisation,
            "multiplicativity": self.multiplicativity,
            "star": self.star,
            "intertwining": self.intertwining,
            "evaluation": self.evaluation,
        }

    @property
    def max_residual(self) -> float:
        return max(self.residuals().values())

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return self.max_residual <= tol * self.scale and self.minimality_rank == self.dim


def verify(l: InvariantLinearisation, tol: float = DEFAULT_TOL) -> VerifyReport:
    """Recompute every axiom of the triple from its final matrices alone."""
    k = l.kernel
    sg = l.action.semigroup
    space = l.space
    scale = max(k.scale(), 1.0)

    adjoints = {p: solve_adjoint(l.v[p], k.h, space, max(tol, 1e-8)).adjoint_matrix for p in k.points}
    fact = 0.0
    for a_i, x in enumerate(k.points):
        for b_i, y in enumerate(k.points):
            fact = max(fact, spec_norm(k.blocks[a_i, b_i] - adjoints[x] @ l.v[y]))

    mult = 0.0
    star = 0.0
    for a_i, al in enumerate(sg.elements):
        for b_i, be in enumerate(sg.elements):
            prod = sg.elements[sg.mul[a_i, b_i]]
            mult = max(mult, spec_norm(l.pi[prod] - l.pi[al] @ l.pi[be]))
        if space.dim:
            pi_adj = solve_adjoint(l.pi[al], space, space, max(tol, 1e-8)).adjoint_matrix
            star = max(star, spec_norm(pi_adj - l.pi[sg.elements[sg.star[a_i]]]))

    inter = 0.0
    for gi, el in enumerate(sg.elements):
        for x_i, p in enumerate(k.points):
            target = k.points[l.action.act_index(gi, x_i)]
            inter = max(inter, spec_norm(l.v[target] - l.pi[el] @ l.v[p]))

    evaln = 0.0
    for p in k.points:
        evaln = max(evaln, spec_norm(adjoints[p] - l.evaluation_matrix(p)))

    if k.n_points and space.dim:
        stacked = np.hstack([l.v[p] for p in k.points])
        sv = np.linalg.svd(stacked, compute_uv=False)
        rank = int(np.sum(sv > max(sv[0], 1.0) * 1e-10)) if sv.size else 0
    else:
        rank = 0

    return VerifyReport(fact, mult, star, inter, evaln, rank, space.dim, scale)


@dataclass(frozen=True)
class UnitaryWitness:
    matrix: np.ndarray
    isometry: float
    intertwining_pi: float
    intertwining_v: float
    surjective: bool
    scale: float

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return (
            max(self.isometry, self.intertwining_pi, self.intertwining_v) <= tol * self.scale
            and self.surjective
        )


def unitary_equivalence(
    l1: InvariantLinearisation, l2: InvariantLinearisation, tol: float = DEFAULT_TOL
) -> UnitaryWitness:
    """Unitary witness between two minimal linearisations of the same data,
    tolerant to permuted point and semigroup enumerations.

    Raises Inequivalent when the generator gramians disagree, which for
    valid inputs means the two objects linearise different kernels.
    """
    if l1.quotient is None or l2.quotient is None:
        raise ValueError("unitary equivalence needs fully constructed linearisations")
    k1, k2 = l1.kernel, l2.kernel
    if set(k1.points) != set(k2.points) or k1.h != k2.h:
        raise Inequivalent(float("inf"), "point sets or value spaces differ")
    if set(l1.action.semigroup.elements) != set(l2.action.semigroup.elements):
        raise Inequivalent(float("inf"), "semigroups differ")
    d = k1.h.dim
    m = k1.h.block_size
    n = k1.n_points
    perm = np.zeros((n * d, n * d))
    for x1, p in enumerate(k1.points):
        x2 = k2.index(p)
        perm[x2 * d : (x2 + 1) * d, x1 * d : (x1 + 1) * d] = np.eye(d)
    pf = inflate(perm, m)
    scale = max(spec_norm(l1.quotient.big_flat), 1.0)
    gram_gap = spec_norm(pf.conj().T @ l2.quotient.big_flat @ pf - l1.quotient.big_flat)
    if gram_gap > tol * scale * 10:
        raise Inequivalent(gram_gap)

    u = l2.quotient.project(perm @ l1.quotient.basis)
    ui = inflate(u, m)
    iso = spec_norm(ui.conj().T @ l2.space.flat_gram @ ui - l1.space.flat_gram)
    ipi = 0.0
    for el in l1.action.semigroup.elements:
        ipi = max(ipi, spec_norm(u @ l1.pi[el] - l2.pi[el] @ u))
    iv = 0.0
    for p in k1.points:
        iv = max(iv, spec_norm(u @ l1.v[p] - l2.v[p]))
    if l1.dim != l2.dim:
        surj = False
    elif l1.dim == 0:
        surj = True
    else:
        sv = np.linalg.svd(u, compute_uv=False)
        surj = bool(sv.size and sv[-1] > max(sv[0], 1.0) * 1e-8)
    wscale = max(1.0, spec_norm(l1.space.flat_gram))
    return UnitaryWitness(frozen(u), iso, ipi, iv, surj, wscale)


@dataclass(frozen=True)
class AdditivityReport:
    hypothesis_residual: float
    representation_residual: float
    scale: float

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return self.representation_residual <= tol * self.scale


def additivity_check(
    l: InvariantLinearisation, alpha, beta, gamma, tol: float = DEFAULT_TOL
) -> AdditivityReport:
    """If the kernel satisfies the pointwise sum rule for three semigroup
    elements, the minimal representation satisfies the same sum rule."""
    k = l.kernel
    sg = l.action.semigroup
    ia, ib, ig = sg.index(alpha), sg.index(beta), sg.index(gamma)
    scale = max(k.scale(), 1.0)
    worst = 0.0
    witness = None
    for x in range(k.n_points):
        xa, xb, xg = (l.action.act_index(i, x) for i in (ia, ib, ig))
        for y in range(k.n_points):
            r = spec_norm(k.blocks[y, xa] + k.blocks[y, xb] - k.blocks[y, xg])
            if r > worst:
                worst, witness = r, (k.points[x], k.points[y])
    if worst > tol * scale:
        raise HypothesisFails(worst, witness)
    rep = spec_norm(l.pi[alpha] + l.pi[beta] - l.pi[gamma])
    return AdditivityReport(worst, rep, max(1.0, spec_norm(l.pi[gamma])))
