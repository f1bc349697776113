"""Exception types raised across the package."""

from __future__ import annotations


class VedilationError(Exception):
    """Base class for all package-specific errors."""


class DescriptorMismatch(VedilationError):
    """Operands live over different ordered *-spaces or have wrong shapes."""


class SpaceMismatch(VedilationError):
    """Vectors, operators or kernels refer to incompatible spaces."""


class ShapeMismatch(VedilationError):
    """Array shapes are inconsistent with the declared dimensions."""


class NotAModule(VedilationError):
    """A module operation was requested on a plain VE-space."""


class ModuleViolation(VedilationError):
    """A module-compatibility certificate failed beyond tolerance."""


class NotAdjointable(VedilationError):
    """No adjoint satisfies the defining identity within tolerance."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = residual
        super().__init__(message or f"no adjoint exists (residual {residual:.3e})")


class DegenerateGram(VedilationError):
    """The gramian is not strict where strictness is required."""


class NotSelfadjoint(VedilationError):
    """A selfadjoint operator was required."""


class NotPSD(VedilationError):
    """Positive semidefiniteness fails; carries an eigenvalue witness."""

    def __init__(self, eigenvalue: float, witness=None, message: str | None = None):
        self.eigenvalue = eigenvalue
        self.witness = witness
        super().__init__(message or f"not positive semidefinite (eigenvalue {eigenvalue:.3e})")


class NotInvariant(VedilationError):
    """Kernel invariance under the semigroup action fails; carries a witness."""

    def __init__(self, residual: float, witness=None, message: str | None = None):
        self.residual = residual
        self.witness = witness
        super().__init__(message or f"kernel is not invariant (residual {residual:.3e})")


class NotTwoPositive(VedilationError):
    """A 2-positive kernel was required."""


class DegenerateQuotientFailure(VedilationError):
    """A null direction of the generator gramian fails the pairing-to-zero
    check; signals numerical breakdown of the quotient, not mathematics."""


class Inequivalent(VedilationError):
    """Two linearisations do not admit a unitary witness."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = residual
        super().__init__(message or f"linearisations are inequivalent (residual {residual:.3e})")


class HypothesisFails(VedilationError):
    """The kernel-level additivity hypothesis fails; carries a witness pair."""

    def __init__(self, residual: float, witness=None, message: str | None = None):
        self.residual = residual
        self.witness = witness
        super().__init__(message or f"additivity hypothesis fails (residual {residual:.3e})")


class NotMinimal(VedilationError):
    """A minimal linearisation or reproducing-kernel space was required."""


class UnknownPoint(VedilationError):
    """A point label does not belong to the kernel's base set."""


class NonAssociative(VedilationError):
    """Structure constants fail the *-algebra axioms."""


class InputError(VedilationError):
    """Base class for problem-file errors (exit code 2 in the CLI)."""


class SchemaError(InputError):
    """A problem file does not match the published schema."""


class UnresolvedReference(InputError):
    """A cross-reference inside a problem file does not resolve."""


class DigestMismatch(InputError):
    """A certificate does not belong to the supplied problem file."""
