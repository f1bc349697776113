"""Dense linear-algebra helpers shared across the package."""

from __future__ import annotations

import numpy as np

#: Default numerical tolerance for all verification residuals.
DEFAULT_TOL = 1e-9

#: Relative eigenvalue threshold below which a quotient direction is treated
#: as null when extracting a strict basis from a degenerate gramian.
RANK_TOL = 1e-8

#: Number of random directions sampled by the probabilistic "elementary"
#: positivity checks.
ELEMENTARY_SAMPLES = 256


def as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=complex)


def frozen(a) -> np.ndarray:
    """Copy into an immutable complex array."""
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def herm_residual(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return spec_norm(a - a.conj().T)


def spec_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def eigh_sorted(a: np.ndarray):
    """Hermitian eigendecomposition of the Hermitian part, ascending."""
    if a.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    return np.linalg.eigh(herm(a))


def eigmin(a: np.ndarray) -> float:
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(herm(a))[0])


def inflate(mat, m: int) -> np.ndarray:
    """kron(mat, I_m): lifts coefficient matrices to flattened block level."""
    mat = np.atleast_2d(as_complex(mat))
    if m == 1:
        return mat
    return np.kron(mat, np.eye(m))


def partial_trace(flat: np.ndarray, m: int) -> np.ndarray:
    """Blockwise trace of a (d*m) x (d*m) matrix, returned as d x d."""
    d = flat.shape[0] // m
    return np.einsum("irjr->ij", flat.reshape(d, m, d, m))


def block_of(flat: np.ndarray, m: int, i: int, j: int) -> np.ndarray:
    return flat[i * m : (i + 1) * m, j * m : (j + 1) * m]


def block_diag(*mats) -> np.ndarray:
    mats = [np.atleast_2d(as_complex(m)) for m in mats]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for m in mats:
        out[r : r + m.shape[0], c : c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] == 0 or b.size == 0:
        return np.zeros((a.shape[1],) + b.shape[1:], dtype=complex)
    return np.linalg.lstsq(a, b, rcond=None)[0]


def psd_range_factor(g: np.ndarray, rel_tol: float = RANK_TOL):
    """Split a Hermitian PSD matrix into kept eigenpairs above the relative
    threshold and the null-side eigenvectors below it.

    Returns (eigvals_kept, eigvecs_kept, eigvecs_null).
    """
    w, v = eigh_sorted(g)
    if w.size == 0:
        return w, v, v
    top = max(float(w[-1]), 0.0)
    thresh = rel_tol * top
    keep = w > thresh
    return w[keep], v[:, keep], v[:, ~keep]


def max_generalized_eig(m: np.ndarray, g: np.ndarray, rel_tol: float = RANK_TOL) -> float:
    """Largest lambda with m x = lambda g x on the range of the PSD matrix g.

    Assumes null(g) <= null(m); directions outside range(g) are ignored.
    """
    w, v, _ = psd_range_factor(g, rel_tol)
    if w.size == 0:
        return 0.0
    f = v / np.sqrt(w)
    c = f.conj().T @ m @ f
    return float(np.linalg.eigvalsh(herm(c))[-1])


def generalized_eig_range(m: np.ndarray, g: np.ndarray, rel_tol: float = RANK_TOL):
    """All generalized eigenvalues of the pencil (m, g) on range(g), ascending."""
    w, v, _ = psd_range_factor(g, rel_tol)
    if w.size == 0:
        return np.zeros(0)
    f = v / np.sqrt(w)
    return np.linalg.eigvalsh(herm(f.conj().T @ m @ f))
