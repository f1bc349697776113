"""Concrete finite-dimensional ordered *-spaces.

Four kinds are shipped: the complex field, full matrix algebras with the PSD
cone, finite products, and scalar kernels on a finite point set.  Every value
space of a gramian in this package is one of these.  Elements embed into a
single complex block-diagonal matrix, which makes cone membership decidable
by one Hermitian eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ._linalg import DEFAULT_TOL, as_complex, block_diag, frozen, herm_residual, spec_norm
from .errors import DescriptorMismatch


@dataclass(frozen=True)
class Scalar:
    """The complex field; cone = nonnegative reals."""

    @property
    def block_size(self) -> int:
        return 1


@dataclass(frozen=True)
class MatrixAlg:
    """m x m complex matrices; cone = PSD Hermitian matrices."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise DescriptorMismatch("MatrixAlg needs a positive size")

    @property
    def block_size(self) -> int:
        return self.m


@dataclass(frozen=True)
class ScalarKernelSpace:
    """Complex kernels on an n-point set; cone = positive semidefinite
    kernels, involution = conjugate transposition of the arguments."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DescriptorMismatch("ScalarKernelSpace needs a positive point count")

    @property
    def block_size(self) -> int:
        return self.n


@dataclass(frozen=True)
class Product:
    """Finite product of ordered *-spaces with the elementwise cone."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise DescriptorMismatch("Product needs at least one factor")

    @property
    def block_size(self) -> int:
        return sum(f.block_size for f in self.factors)


OrderedSpaceDescriptor = Union[Scalar, MatrixAlg, ScalarKernelSpace, Product]


class ZElement:
    """A value of a concrete ordered *-space.

    The payload is a complex scalar for ``Scalar``, a square complex array
    for the matrix kinds, and a tuple of ZElements for ``Product``.
    """

    __slots__ = ("descriptor", "payload")

    def __init__(self, descriptor: OrderedSpaceDescriptor, payload):
        self.descriptor = descriptor
        if isinstance(descriptor, Scalar):
            self.payload = complex(payload)
        elif isinstance(descriptor, Product):
            parts = tuple(payload)
            if len(parts) != len(descriptor.factors):
                raise DescriptorMismatch("product payload arity mismatch")
            self.payload = tuple(
                p if isinstance(p, ZElement) else ZElement(f, p)
                for f, p in zip(descriptor.factors, parts)
            )
            for f, p in zip(descriptor.factors, self.payload):
                if p.descriptor != f:
                    raise DescriptorMismatch("product factor mismatch")
        else:
            arr = frozen(payload)
            m = descriptor.block_size
            if arr.shape != (m, m):
                raise DescriptorMismatch(f"expected shape {(m, m)}, got {arr.shape}")
            self.payload = arr

    def embed(self) -> np.ndarray:
        """The block-diagonal complex matrix carrying this element."""
        if isinstance(self.descriptor, Scalar):
            return np.array([[self.payload]], dtype=complex)
        if isinstance(self.descriptor, Product):
            return block_diag(*[p.embed() for p in self.payload])
        return np.array(self.payload)

    def involute(self) -> "ZElement":
        if isinstance(self.descriptor, Scalar):
            return ZElement(self.descriptor, np.conj(self.payload))
        if isinstance(self.descriptor, Product):
            return ZElement(self.descriptor, tuple(p.involute() for p in self.payload))
        return ZElement(self.descriptor, np.conj(np.transpose(self.payload)))

    def norm(self) -> float:
        if isinstance(self.descriptor, Scalar):
            return abs(self.payload)
        if isinstance(self.descriptor, Product):
            return max(p.norm() for p in self.payload)
        return spec_norm(self.payload)

    def __add__(self, other: "ZElement") -> "ZElement":
        _same_descriptor(self, other)
        if isinstance(self.descriptor, Product):
            return ZElement(self.descriptor, tuple(a + b for a, b in zip(self.payload, other.payload)))
        return ZElement(self.descriptor, np.add(self.payload, other.payload))

    def __sub__(self, other: "ZElement") -> "ZElement":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "ZElement":
        if isinstance(self.descriptor, Product):
            return ZElement(self.descriptor, tuple(p * scalar for p in self.payload))
        return ZElement(self.descriptor, np.multiply(self.payload, complex(scalar)))

    __rmul__ = __mul__

    def __neg__(self) -> "ZElement":
        return self * (-1.0)

    def __repr__(self):
        return f"ZElement({self.descriptor!r}, {self.payload!r})"


def unembed(descriptor: OrderedSpaceDescriptor, flat: np.ndarray) -> ZElement:
    """Read a ZElement back off its block-diagonal embedding."""
    flat = as_complex(flat)
    if isinstance(descriptor, Scalar):
        return ZElement(descriptor, flat[0, 0])
    if isinstance(descriptor, Product):
        parts = []
        at = 0
        for f in descriptor.factors:
            b = f.block_size
            parts.append(unembed(f, flat[at : at + b, at : at + b]))
            at += b
        return ZElement(descriptor, tuple(parts))
    return ZElement(descriptor, flat)


def zero(descriptor: OrderedSpaceDescriptor) -> ZElement:
    if isinstance(descriptor, Scalar):
        return ZElement(descriptor, 0.0)
    if isinstance(descriptor, Product):
        return ZElement(descriptor, tuple(zero(f) for f in descriptor.factors))
    m = descriptor.block_size
    return ZElement(descriptor, np.zeros((m, m)))


def involute(z: ZElement) -> ZElement:
    """The involution of the ordered *-space; applying twice is the identity."""
    return z.involute()


def in_cone(z: ZElement, tol: float = DEFAULT_TOL) -> bool:
    """Membership in the positive cone, up to tolerance.

    Matrix kinds: Hermitian up to ``tol * scale`` and smallest eigenvalue at
    least ``-tol * scale``; scalars: nonnegative real part, negligible
    imaginary part.  ``scale = max(norm, 1)``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if isinstance(z.descriptor, Product):
        return all(in_cone(p, tol) for p in z.payload)
    scale = max(z.norm(), 1.0)
    if isinstance(z.descriptor, Scalar):
        return z.payload.real >= -tol * scale and abs(z.payload.imag) <= tol * scale
    a = np.array(z.payload)
    if herm_residual(a) > tol * scale:
        return False
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0]) >= -tol * scale


def leq(a: ZElement, b: ZElement, tol: float = DEFAULT_TOL) -> bool:
    """Partial order: a <= b iff b - a lies in the cone."""
    _same_descriptor(a, b)
    return in_cone(b - a, tol)


def schur_product(k: ZElement, l: ZElement) -> ZElement:
    """Entrywise product of two scalar kernels on the same point set."""
    if not isinstance(k.descriptor, ScalarKernelSpace):
        raise DescriptorMismatch("schur_product is defined on ScalarKernelSpace only")
    _same_descriptor(k, l)
    return ZElement(k.descriptor, np.multiply(k.payload, l.payload))


def _same_descriptor(a: ZElement, b: ZElement) -> None:
    if a.descriptor != b.descriptor:
        raise DescriptorMismatch(f"{a.descriptor} vs {b.descriptor}")


#: A scalar kernel whose involution composed with itself under the Schur
#: product leaves the positive cone.  Pinned from a randomized search over
#: small complex kernels; the adjoint-product kernel has eigenvalue -1.
SCHUR_STAR_COUNTEREXAMPLE = ZElement(
    ScalarKernelSpace(2), np.array([[1.0, 2.0j], [1.0, 1.0]])
)
