"""
Quantum state containers for the TTO / EoF toolkit.
Defines purification factors, density matrices and pure-state ensembles.
"""

from dataclasses import dataclass

import numpy as np

from errors import InvalidInputError
from linalg import ComplexMatrix, as_complex_matrix, eigh, hermitian_defect

STATE_TOL = 1e-10
ZERO_PROBABILITY = 1e-14


@dataclass
class PurificationFactor:
    """
    Rectangular X with rho = X X^dagger.

    Rows index the d^N physical basis (site 0 is the most significant digit),
    columns index the Kraus space of dimension K0.
    """

    data: ComplexMatrix
    n_sites: int
    local_dim: int = 2

    def __post_init__(self) -> None:
        self.data = as_complex_matrix(self.data, 'purification factor')
        if self.n_sites < 1 or self.local_dim < 2:
            raise InvalidInputError(f'Invalid lattice: N={self.n_sites}, d={self.local_dim}')
        if self.data.shape[0] != self.local_dim ** self.n_sites:
            raise InvalidInputError(
                f'Factor has {self.data.shape[0]} rows, expected d^N = {self.local_dim ** self.n_sites}')
        trace = self.trace
        if abs(trace - 1.0) > STATE_TOL:
            raise InvalidInputError(f'Tr(XX^dagger) = {trace:.12f}, expected 1')

    @property
    def kraus_dim(self) -> int:
        return self.data.shape[1]

    @property
    def trace(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2))

    @property
    def probabilities(self) -> np.ndarray:
        """Squared column norms, the weights of the stored decomposition."""
        return np.sum(np.abs(self.data) ** 2, axis=0)

    def density_matrix(self) -> 'DensityMatrix':
        return DensityMatrix(self.data @ self.data.conj().T)

    @classmethod
    def from_columns(cls, columns: ComplexMatrix, n_sites: int, local_dim: int = 2) -> 'PurificationFactor':
        """Build a factor from unnormalized columns, rescaling to unit trace."""
        columns = as_complex_matrix(columns, 'columns')
        norm = np.sqrt(np.sum(np.abs(columns) ** 2))
        if norm == 0:
            raise InvalidInputError('Cannot normalize a zero factor')
        return cls(columns / norm, n_sites, local_dim)


@dataclass
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    data: ComplexMatrix

    def __post_init__(self) -> None:
        self.data = as_complex_matrix(self.data, 'density matrix')
        if self.data.shape[0] != self.data.shape[1]:
            raise InvalidInputError(f'Density matrix must be square, got {self.data.shape}')
        if hermitian_defect(self.data) > STATE_TOL:
            raise InvalidInputError('Density matrix is not Hermitian')
        trace = float(np.real(np.trace(self.data)))
        if abs(trace - 1.0) > STATE_TOL:
            raise InvalidInputError(f'Density matrix trace is {trace:.12f}, expected 1')
        lowest = float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])
        if lowest < -STATE_TOL:
            raise InvalidInputError(f'Density matrix has negative eigenvalue {lowest:.3e}')

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def purification(self, n_sites: int, local_dim: int = 2, rank_tol: float = 1e-12) -> PurificationFactor:
        """
        Factor rho = X X^dagger from its eigen-decomposition.

        Columns are sqrt(lambda_j) |v_j> in decreasing lambda_j; eigenvalues
        below rank_tol * lambda_max are dropped and the trace restored.
        """
        result = eigh(self.data)
        order = np.argsort(result.eigenvalues)[::-1]
        weights = np.clip(result.eigenvalues[order], 0.0, None)
        keep = weights > rank_tol * weights[0]
        columns = result.eigenvectors[:, order][:, keep] * np.sqrt(weights[keep])
        return PurificationFactor.from_columns(columns, n_sites, local_dim)


@dataclass
class PureStateEnsemble:
    """Probabilities p_j and unit-norm states psi_j stored as columns."""

    probabilities: np.ndarray
    states: ComplexMatrix

    def __post_init__(self) -> None:
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.states = np.asarray(self.states, dtype=np.complex128)
        if self.states.ndim != 2 or self.states.shape[1] != len(self.probabilities):
            raise InvalidInputError('Ensemble states and probabilities disagree in size')
        if np.any(self.probabilities < -ZERO_PROBABILITY):
            raise InvalidInputError('Ensemble has negative probabilities')
        total = float(np.sum(self.probabilities))
        if abs(total - 1.0) > STATE_TOL:
            raise InvalidInputError(f'Ensemble probabilities sum to {total:.12f}')

    @property
    def size(self) -> int:
        return len(self.probabilities)

    def density_matrix(self) -> ComplexMatrix:
        """Sum_j p_j |psi_j><psi_j| as a plain array."""
        weighted = self.states * np.sqrt(np.clip(self.probabilities, 0.0, None))
        return weighted @ weighted.conj().T
