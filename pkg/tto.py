"""
Tree tensor operator of depth one: X = (V_L (x) V_R) R.

The branches are isometries on the two halves of the chain; the root R
carries the Kraus index and every bit of bipartite entanglement.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import InvalidInputError
from linalg import ComplexMatrix, svd_truncated
from quantum_state import STATE_TOL, ZERO_PROBABILITY, PurificationFactor

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest count as exact zeros
ENTROPY_CUTOFF = 1e-14
# Negative probabilities tolerated as round-off
PROBABILITY_SLACK = 1e-12

Bipartition = Tuple[int, int]


@dataclass
class TreeTensorOperator:
    """Two branch isometries and the root tensor, stored as (M_A * M_B) x K0."""

    branch_left: ComplexMatrix
    branch_right: ComplexMatrix
    root: ComplexMatrix
    bipartition: Bipartition
    discarded_weight: float
    local_dim: int = 2

    @property
    def bond_dims(self) -> Tuple[int, int]:
        return self.branch_left.shape[1], self.branch_right.shape[1]

    @property
    def kraus_dim(self) -> int:
        return self.root.shape[1]

    def root_tensor(self) -> np.ndarray:
        """Root as an M_A x M_B x K0 array."""
        m_a, m_b = self.bond_dims
        return self.root.reshape(m_a, m_b, self.kraus_dim)

    def reconstruct(self) -> ComplexMatrix:
        """Contract the branches back onto the root, giving an approximation of X."""
        full = np.einsum('aA,bB,ABk->abk', self.branch_left, self.branch_right, self.root_tensor())
        return full.reshape(-1, self.kraus_dim)


@dataclass
class EntropyReport:
    """Entropies of a probability vector, in bits."""

    von_neumann: float
    purity: float
    renyi: Dict[float, float] = field(default_factory=dict)


def half_bipartition(n_sites: int) -> Bipartition:
    """Contiguous split (1..N/2 | N/2+1..N)."""
    return n_sites // 2, n_sites - n_sites // 2


def _check_bipartition(n_sites: int, bipartition: Bipartition) -> Bipartition:
    n_a, n_b = bipartition
    if n_a < 1 or n_b < 1 or n_a + n_b != n_sites:
        raise InvalidInputError(f'Bipartition {bipartition} does not split {n_sites} sites')
    return n_a, n_b


def compress_to_root(x: PurificationFactor, max_bond: int,
                     bipartition: Optional[Bipartition] = None) -> TreeTensorOperator:
    """
    Compress a purification factor into a depth-one TTO.

    Two truncated SVDs: first X as d^{N_A} x (d^{N_B} K0) gives V_L; the
    remainder regrouped as d^{N_B} x (M_A K0) gives V_R; what is left is R.

    Args:
        x: Purification factor of the state
        max_bond: Maximal bond dimension M of both branches
        bipartition: Site counts (N_A, N_B), half-half by default

    Returns:
        TreeTensorOperator whose discarded_weight sums both truncations
    """
    if max_bond < 1:
        raise InvalidInputError(f'Bond dimension must be >= 1, got {max_bond}')
    n_a, n_b = _check_bipartition(x.n_sites, bipartition or half_bipartition(x.n_sites))
    d = x.local_dim
    dim_a, dim_b, k0 = d ** n_a, d ** n_b, x.kraus_dim

    first = svd_truncated(x.data.reshape(dim_a, dim_b * k0), max_bond, ENTROPY_CUTOFF)
    m_a = first.rank
    remainder = (first.singular_values[:, None] * first.right_vectors_adj).reshape(m_a, dim_b, k0)

    regrouped = remainder.transpose(1, 0, 2).reshape(dim_b, m_a * k0)
    second = svd_truncated(regrouped, max_bond, ENTROPY_CUTOFF)
    m_b = second.rank
    core = (second.singular_values[:, None] * second.right_vectors_adj).reshape(m_b, m_a, k0)
    root = core.transpose(1, 0, 2).reshape(m_a * m_b, k0)

    discarded = first.discarded_weight + second.discarded_weight
    if first.split_multiplet or second.split_multiplet:
        logger.warning(f'Bond dimension {max_bond} cuts through a degenerate singular multiplet')
    logger.debug(f'TTO bonds ({m_a}, {m_b}), K0={k0}, discarded weight {discarded:.3e}')

    return TreeTensorOperator(
        branch_left=first.left_vectors,
        branch_right=second.left_vectors,
        root=root,
        bipartition=(n_a, n_b),
        discarded_weight=discarded,
        local_dim=d,
    )


def _entropy_from_schmidt(values: np.ndarray) -> np.ndarray:
    """-sum s^2 log2 s^2 along the last axis, tiny values dropped."""
    values = np.atleast_2d(values)
    s_max = values.max(axis=-1, keepdims=True)
    kept = np.where(values > ENTROPY_CUTOFF * s_max, values, 0.0)
    norm = np.sum(kept ** 2, axis=-1, keepdims=True)
    probs = np.divide(kept ** 2, norm, out=np.zeros_like(kept), where=norm > 0)
    logs = np.log2(np.where(probs > 0, probs, 1.0))
    return np.clip(-np.sum(probs * logs, axis=-1), 0.0, None)


def column_entropies(columns: ComplexMatrix, shape: Tuple[int, int]) -> np.ndarray:
    """
    Entanglement entropy of every column reshaped to shape, in bits.

    Columns need not be normalized; zero columns give zero.
    """
    k = columns.shape[1]
    if columns.shape[0] != shape[0] * shape[1]:
        raise InvalidInputError(f'Columns of length {columns.shape[0]} do not reshape to {shape}')
    if min(shape) == 1:
        return np.zeros(k)
    stack = columns.T.reshape(k, shape[0], shape[1])
    values = np.linalg.svd(stack, compute_uv=False)
    return _entropy_from_schmidt(values)


def entanglement_entropy(state: np.ndarray, bipartition: Bipartition, local_dim: int = 2) -> float:
    """Von Neumann entropy of the reduced state of a pure vector, in bits."""
    state = np.asarray(state, dtype=np.complex128).ravel()
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > STATE_TOL:
        raise InvalidInputError(f'State norm is {norm:.12f}, expected 1')
    n_a, n_b = bipartition
    if local_dim ** (n_a + n_b) != len(state):
        raise InvalidInputError(f'State of length {len(state)} does not match bipartition {bipartition}')
    _check_bipartition(n_a + n_b, bipartition)
    shape = (local_dim ** n_a, local_dim ** n_b)
    return float(column_entropies(state[:, None], shape)[0])


def spectrum_entropies(probabilities: Iterable[float], alphas: Sequence[float] = ()) -> EntropyReport:
    """
    Von Neumann, Renyi and purity of a probability vector.

    Renyi entropies are reported for every alpha except 1; alpha = inf
    gives the min-entropy.
    """
    p = np.asarray(list(probabilities), dtype=float)
    if p.size == 0:
        raise InvalidInputError('Empty probability vector')
    if np.any(p < -PROBABILITY_SLACK):
        raise InvalidInputError(f'Negative probability {p.min():.3e}')
    if abs(float(p.sum()) - 1.0) > STATE_TOL:
        raise InvalidInputError(f'Probabilities sum to {p.sum():.12f}')
    p = np.clip(p, 0.0, None)
    support = p[p > 0]

    von_neumann = float(-np.sum(support * np.log2(support)))
    renyi: Dict[float, float] = {}
    for alpha in alphas:
        if alpha == 1:
            continue
        if np.isinf(alpha):
            renyi[alpha] = float(-np.log2(support.max()))
        elif alpha == 0:
            renyi[alpha] = float(np.log2(len(support)))
        else:
            renyi[alpha] = float(np.log2(np.sum(support ** alpha)) / (1.0 - alpha))

    return EntropyReport(von_neumann=max(0.0, von_neumann), purity=float(np.sum(p ** 2)), renyi=renyi)


def root_column_entropies(tto: TreeTensorOperator) -> List[Tuple[float, float]]:
    """(p_j, S_j) for every Kraus column of the root."""
    probabilities = np.sum(np.abs(tto.root) ** 2, axis=0)
    entropies = column_entropies(tto.root, tto.bond_dims)
    return [(float(p), float(s) if p > ZERO_PROBABILITY else 0.0)
            for p, s in zip(probabilities, entropies)]


def density_entropy(x: PurificationFactor) -> float:
    """Von Neumann entropy S(rho) of rho = X X^dagger, in bits."""
    values = np.linalg.svd(x.data, compute_uv=False)
    eigenvalues = values ** 2
    return spectrum_entropies(eigenvalues / eigenvalues.sum()).von_neumann
