"""Reproducing-kernel realisations of linearised kernels.

Members are stored as quotient coordinates over the generator basis of the
linearisation; evaluation materialises function values on demand.  The
conversions with linearisations transport the gramian either way and are
verified rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._linalg import DEFAULT_TOL, as_complex, frozen, spec_norm
from .errors import NotMinimal, SpaceMismatch, UnknownPoint
from .kernels import OperatorKernel
from .linearise import InvariantLinearisation, VerifyReport, verify
from .operators import AdjointableOp, solve_adjoint
from .star_semigroup import SemigroupAction
from .ve_space import VESpace, Vector, gramian


class RKSpace:
    """A space of value-space-valued functions reproduced by a kernel."""

    def __init__(self, linearisation: InvariantLinearisation, minimal: bool = True):
        self.lin = linearisation
        self.kernel: OperatorKernel = linearisation.kernel
        self.space: VESpace = linearisation.space
        self.minimal = bool(minimal)
        self._eval = {p: frozen(linearisation.evaluation_matrix(p)) for p in self.kernel.points}

    @property
    def dim(self) -> int:
        return self.space.dim

    def member(self, coords) -> "RKMember":
        return RKMember(self, frozen(np.ravel(as_complex(coords))))

    def generator_member(self, point, h) -> "RKMember":
        """The member obtained by planting ``h`` at ``point``."""
        x = self.kernel.index(point)
        h = np.ravel(as_complex(h))
        coords = self.lin.v[self.kernel.points[x]] @ h
        return self.member(coords)

    def member_gram(self, f: "RKMember", g: "RKMember"):
        return gramian(Vector(self.space, f.coords), Vector(self.space, g.coords))


@dataclass(frozen=True)
class RKMember:
    rk: RKSpace
    coords: np.ndarray


def evaluate(f: RKMember, x) -> Vector:
    """The function value f(x) as a vector of the value space."""
    rk = f.rk
    if x not in rk._eval:
        raise UnknownPoint(f"{x!r} is not a kernel point")
    return Vector(rk.kernel.h, rk._eval[x] @ f.coords)


def reproducing_residual(r: RKSpace, f: RKMember, x, h) -> float:
    """Residual of [f(x), h] = [f, k_x h] for one member, point and vector."""
    lhs = gramian(evaluate(f, x), Vector(r.kernel.h, h)).embed()
    kxh = r.generator_member(x, h)
    rhs = r.member_gram(f, kxh).embed()
    return spec_norm(lhs - rhs)


@dataclass(frozen=True)
class EvaluationAdjointReport:
    op: AdjointableOp
    adjoint_vs_kernel_section: float
    rebuilt_kernel_residual: float
    rebuilt_hermitian_residual: float

    def ok(self, tol: float = DEFAULT_TOL, scale: float = 1.0) -> bool:
        return (
            max(self.adjoint_vs_kernel_section, self.rebuilt_kernel_residual, self.rebuilt_hermitian_residual)
            <= tol * scale
        )


def evaluation_adjoint(r: RKSpace, x, tol: float = DEFAULT_TOL) -> EvaluationAdjointReport:
    """The evaluation operator at a point, with its solved adjoint.

    Verifies that the adjoint is the kernel section at the point, rebuilds
    the kernel from the adjoints of evaluations, and checks the rebuilt
    kernel is Hermitian and matches the original.
    """
    if x not in r._eval:
        raise UnknownPoint(f"{x!r} is not a kernel point")
    k = r.kernel
    ex = solve_adjoint(r._eval[x], r.space, k.h, tol)
    vx = r.lin.v[x]
    section_gap = spec_norm(ex.adjoint_matrix - vx)
    rebuilt = 0.0
    herm_gap = 0.0
    a = k.index(x)
    for b, y in enumerate(k.points):
        col = r._eval[y] @ ex.adjoint_matrix  # k(y, x) rebuilt from E_x*
        rebuilt = max(rebuilt, spec_norm(col - k.blocks[b, a]))
        back = r._eval[x] @ solve_adjoint(r._eval[y], r.space, k.h, tol).adjoint_matrix
        herm_gap = max(herm_gap, spec_norm(k.adjoint_blocks[b, a] - back))
    return EvaluationAdjointReport(ex, section_gap, rebuilt, herm_gap)


def from_linearisation(l: InvariantLinearisation, tol: float = DEFAULT_TOL) -> RKSpace:
    """Realise a minimal linearisation as a reproducing-kernel space.

    The transport sends a vector of the linearisation space to the function
    of its evaluations; since members share quotient coordinates the map is
    the identity on coordinates and trivially isometric and bijective.
    """
    report = l.report or verify(l, tol)
    if report.minimality_rank != report.dim:
        raise NotMinimal("the linearisation is not minimal")
    if not report.ok(max(tol, 1e-8)):
        raise SpaceMismatch(f"linearisation fails verification: {report.residuals()}")
    return RKSpace(l, minimal=True)


def to_linearisation(
    r: RKSpace, action: Optional[SemigroupAction] = None, tol: float = DEFAULT_TOL
) -> InvariantLinearisation:
    """Recover a linearisation whose space is the reproducing-kernel space
    and whose point maps are the kernel sections; with an action, attach the
    representation that shifts sections along the action and verify it."""
    if not r.minimal:
        raise NotMinimal("conversion requires a minimal reproducing-kernel space")
    lin = r.lin
    act = action or lin.action
    rebuilt = InvariantLinearisation(
        kernel=lin.kernel,
        action=act,
        quotient=lin.quotient,
        space=r.space,
        v={p: lin.v[p] for p in r.kernel.points},
        pi=dict(lin.pi) if action is None else _section_shift_representation(r, act, tol),
        report=None,
    )
    rebuilt.report = verify(rebuilt, tol)
    return rebuilt


def _section_shift_representation(r: RKSpace, act: SemigroupAction, tol: float):
    """rho(xi) k_x h = k_{xi.x} h, assembled on the generator basis."""
    from .linearise import relabel_matrix

    d = r.kernel.h.dim
    pi = {}
    for gi, el in enumerate(act.semigroup.elements):
        pi[el] = r.lin.quotient.push_map(relabel_matrix(act, d, gi), tol)
    return pi
