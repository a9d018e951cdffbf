"""
Dense complex linear algebra used by every other module.
Matrices are numpy complex128 arrays in row-major (C) order.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg

from errors import InvalidInputError

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
Seed = Union[int, np.random.Generator]

DECOMPOSITION_TOL = 1e-10
UNITARITY_TOL = 1e-12
MULTIPLET_TOL = 1e-12


@dataclass
class SvdResult:
    """Truncated singular value decomposition m ~ U diag(s) Vh."""

    left_vectors: ComplexMatrix
    singular_values: np.ndarray
    right_vectors_adj: ComplexMatrix
    discarded_weight: float
    split_multiplet: bool = False

    @property
    def rank(self) -> int:
        return len(self.singular_values)

    def reconstruct(self) -> ComplexMatrix:
        return (self.left_vectors * self.singular_values) @ self.right_vectors_adj


@dataclass
class EighResult:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: ComplexMatrix


def as_complex_matrix(m, name: str = 'matrix') -> ComplexMatrix:
    """Validate and convert to a finite two-dimensional complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise InvalidInputError(f'{name} must be two-dimensional, got shape {arr.shape}')
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidInputError(f'{name} has an empty dimension: {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f'{name} has non-finite entries')
    return arr


def make_rng(seed: Seed) -> np.random.Generator:
    """Return a generator for an integer seed; generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def hermitian_defect(h: ComplexMatrix) -> float:
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def isometry_defect(v: ComplexMatrix) -> float:
    """Frobenius distance of V^dagger V from the identity."""
    gram = v.conj().T @ v
    return float(np.linalg.norm(gram - np.eye(gram.shape[0])))


def _check_hermitian(h: ComplexMatrix, name: str) -> ComplexMatrix:
    h = as_complex_matrix(h, name)
    if h.shape[0] != h.shape[1]:
        raise InvalidInputError(f'{name} must be square, got shape {h.shape}')
    scale = max(1.0, float(np.max(np.abs(h))))
    if hermitian_defect(h) > DECOMPOSITION_TOL * scale:
        raise InvalidInputError(f'{name} is not Hermitian (defect {hermitian_defect(h):.3e})')
    return h


def svd_truncated(m: ComplexMatrix, max_rank: int, rel_tol: float = 0.0) -> SvdResult:
    """
    Singular value decomposition keeping the dominant singular triples.

    Retains min(max_rank, #{s_i > rel_tol * s_max}) triples, at least one.
    A cut that falls inside a degenerate multiplet is flagged, never hidden.

    Args:
        m: Matrix to decompose
        max_rank: Hard cap on the number of kept triples
        rel_tol: Relative cutoff on singular values

    Returns:
        SvdResult with the squared norm of dropped values in discarded_weight
    """
    if max_rank < 1:
        raise InvalidInputError(f'max_rank must be >= 1, got {max_rank}')
    if rel_tol < 0:
        raise InvalidInputError(f'rel_tol must be >= 0, got {rel_tol}')
    m = as_complex_matrix(m)

    try:
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver='gesdd')
    except np.linalg.LinAlgError:
        logger.warning(f'gesdd failed on {m.shape} matrix, retrying with gesvd')
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver='gesvd')

    s_max = s[0] if len(s) else 0.0
    above = int(np.count_nonzero(s > rel_tol * s_max)) if s_max > 0 else 0
    keep = max(1, min(max_rank, above))

    split = False
    if keep < len(s) and s[keep - 1] > 0:
        split = bool(abs(s[keep - 1] - s[keep]) <= MULTIPLET_TOL * s[keep - 1])
        if split:
            logger.debug(f'Truncation at rank {keep} splits a degenerate multiplet')

    dropped = s[keep:]
    return SvdResult(
        left_vectors=u[:, :keep],
        singular_values=s[:keep],
        right_vectors_adj=vh[:keep, :],
        discarded_weight=float(np.sum(dropped ** 2)),
        split_multiplet=split,
    )


def eigh(h: ComplexMatrix, count: Optional[int] = None) -> EighResult:
    """
    Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.

    With count set only the lowest count eigenpairs are computed. Matrices
    with an identically zero imaginary part go through the real solver.
    """
    h = _check_hermitian(h, 'hermitian matrix')
    dim = h.shape[0]
    if count is not None and not 1 <= count <= dim:
        raise InvalidInputError(f'count must lie in [1, {dim}], got {count}')

    sym = 0.5 * (h + h.conj().T)
    if not np.any(sym.imag):
        sym = sym.real
    if count is None or count == dim:
        w, v = scipy.linalg.eigh(sym)
    else:
        w, v = scipy.linalg.eigh(sym, subset_by_index=[0, count - 1])
    return EighResult(eigenvalues=w, eigenvectors=v.astype(np.complex128))


def unitary_from_generator(a: ComplexMatrix) -> ComplexMatrix:
    """exp(iA) for Hermitian A, built from the spectral decomposition of A."""
    a = _check_hermitian(a, 'generator')
    result = eigh(a)
    v = result.eigenvectors
    return (v * np.exp(1j * result.eigenvalues)) @ v.conj().T


def ginibre_matrix(rows: int, cols: int, seed: Seed) -> ComplexMatrix:
    """Complex matrix with independent standard-normal real and imaginary parts."""
    if rows < 1 or cols < 1:
        raise InvalidInputError(f'Ginibre dimensions must be >= 1, got {rows}x{cols}')
    rng = make_rng(seed)
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def haar_random_unitary(dim: int, seed: Seed) -> ComplexMatrix:
    """Haar-distributed unitary from the QR of a Ginibre matrix, R phases removed."""
    if dim < 1:
        raise InvalidInputError(f'dim must be >= 1, got {dim}')
    z = ginibre_matrix(dim, dim, seed)
    q, r = scipy.linalg.qr(z)
    d = np.diag(r)
    phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * phases
