"""
Entanglement of formation by convex-roof minimization.

A pure-state decomposition X' = X U is searched over right isometries U,
taken as K0 rows of exp(iA) for a Hermitian K x K generator A. The average
entanglement of the columns of X' is minimized by Nelder-Mead simplex
search; any evaluated point is an upper bound on the EoF.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from errors import InvalidInputError
from linalg import ComplexMatrix, as_complex_matrix, make_rng, unitary_from_generator
from models import EofOptions, EofResult, ThermalSpec
from quantum_state import STATE_TOL, ZERO_PROBABILITY, PureStateEnsemble
from spin_models import thermal_purification
from tto import column_entropies, compress_to_root, density_entropy, half_bipartition

logger = logging.getLogger(__name__)

RootShape = Tuple[int, int]


@dataclass
class SearchState:
    """Hermitian generator A plus the rows of exp(iA) that form the mixer."""

    generator: ComplexMatrix
    kraus_dim: int
    rows: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.generator = as_complex_matrix(self.generator, 'generator')
        k = self.generator.shape[0]
        if self.generator.shape != (k, k):
            raise InvalidInputError(f'Generator must be square, got {self.generator.shape}')
        if not 1 <= self.kraus_dim <= k:
            raise InvalidInputError(f'Need 1 <= K0 <= K, got K0={self.kraus_dim}, K={k}')
        if np.max(np.abs(self.generator - self.generator.conj().T)) > STATE_TOL:
            raise InvalidInputError('Generator is not Hermitian')
        if self.rows is None:
            self.rows = np.arange(self.kraus_dim)
        self.rows = np.asarray(self.rows, dtype=int)
        if len(self.rows) != self.kraus_dim or len(set(self.rows.tolist())) != self.kraus_dim:
            raise InvalidInputError('Row selection must pick K0 distinct rows')

    @property
    def size(self) -> int:
        return self.generator.shape[0]

    @property
    def parameters(self) -> np.ndarray:
        return params_from_generator(self.generator)

    @classmethod
    def zero(cls, kraus_dim: int, size: Optional[int] = None) -> 'SearchState':
        k = size if size is not None else kraus_dim
        return cls(np.zeros((k, k), dtype=np.complex128), kraus_dim)

    @classmethod
    def from_parameters(cls, params: np.ndarray, kraus_dim: int, size: int,
                        rows: Optional[np.ndarray] = None) -> 'SearchState':
        return cls(generator_from_params(params, size), kraus_dim, rows)


@dataclass
class ScanPoint:
    """One row of a K0 or M convergence scan."""

    k0: int
    k: int
    value: float
    evaluations: int
    converged: bool
    k0_effective: Optional[int] = None
    max_bond: Optional[int] = None
    density_entropy: Optional[float] = None
    value_k_plus_2: Optional[float] = None


@dataclass
class MScan:
    """E_F against bond dimension, with the smallest M reaching 99 % of the exact value."""

    points: List[ScanPoint] = field(default_factory=list)
    converged_bond: Optional[int] = None
    reference: float = 0.0


def generator_from_params(params: np.ndarray, size: int) -> ComplexMatrix:
    """
    Hermitian K x K matrix from K^2 reals.

    Layout: K diagonal entries, then real parts of the strict upper
    triangle, then imaginary parts, both in row-major order.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (size * size,):
        raise InvalidInputError(f'Expected {size * size} parameters, got {params.shape}')
    upper = np.triu_indices(size, k=1)
    n_off = len(upper[0])
    a = np.zeros((size, size), dtype=np.complex128)
    a[upper] = params[size:size + n_off] + 1j * params[size + n_off:]
    a = a + a.conj().T
    a[np.diag_indices(size)] = params[:size]
    return a


def params_from_generator(a: ComplexMatrix) -> np.ndarray:
    size = a.shape[0]
    upper = np.triu_indices(size, k=1)
    return np.concatenate([np.real(np.diag(a)), np.real(a[upper]), np.imag(a[upper])])


def build_mixer(state: SearchState) -> ComplexMatrix:
    """Rows of exp(iA) selected by the state, a K0 x K right isometry."""
    return unitary_from_generator(state.generator)[state.rows, :]


def _split_columns(columns: ComplexMatrix) -> Tuple[np.ndarray, ComplexMatrix]:
    probabilities = np.sum(np.abs(columns) ** 2, axis=0)
    norms = np.sqrt(probabilities)
    safe = np.where(probabilities > ZERO_PROBABILITY, norms, 1.0)
    states = np.where(probabilities > ZERO_PROBABILITY, columns / safe, 0.0)
    return probabilities, states


def apply_mixer(factor: ComplexMatrix, mixer: ComplexMatrix) -> PureStateEnsemble:
    """New decomposition from the columns of X' = X U."""
    if factor.shape[1] != mixer.shape[0]:
        raise InvalidInputError(
            f'Factor has {factor.shape[1]} columns but the mixer has {mixer.shape[0]} rows')
    probabilities, states = _split_columns(factor @ mixer)
    return PureStateEnsemble(probabilities, states)


def average_entanglement(ensemble: PureStateEnsemble, root_shape: RootShape) -> float:
    """sum_j p_j S(psi_j) in bits, zero-weight states contributing nothing."""
    entropies = column_entropies(ensemble.states, root_shape)
    weights = np.where(ensemble.probabilities > ZERO_PROBABILITY, ensemble.probabilities, 0.0)
    return float(np.dot(weights, entropies))


def _normalized(factor: ComplexMatrix) -> ComplexMatrix:
    factor = as_complex_matrix(factor, 'factor')
    trace = float(np.sum(np.abs(factor) ** 2))
    if trace <= 0:
        raise InvalidInputError('Factor has zero norm')
    if abs(trace - 1.0) > STATE_TOL:
        logger.debug(f'Renormalizing factor with trace {trace:.12f}')
    return factor / np.sqrt(trace)


def make_objective(factor: ComplexMatrix, size: int, rows: np.ndarray,
                   root_shape: RootShape) -> Callable[[np.ndarray], float]:
    """Average entanglement as a function of the K^2 generator parameters."""
    def objective(params: np.ndarray) -> float:
        mixer = unitary_from_generator(generator_from_params(params, size))[rows, :]
        columns = factor @ mixer
        probabilities = np.sum(np.abs(columns) ** 2, axis=0)
        entropies = column_entropies(columns, root_shape)
        weights = np.where(probabilities > ZERO_PROBABILITY, probabilities, 0.0)
        return float(np.dot(weights, entropies))
    return objective


def _initial_simplex(x0: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([x0, x0 + step * np.eye(len(x0))])


def minimize_eof(factor: ComplexMatrix, root_shape: RootShape, kraus_dim: Optional[int] = None,
                 size: Optional[int] = None, options: Optional[EofOptions] = None,
                 start: Optional[SearchState] = None) -> EofResult:
    """
    Upper bound on the EoF of rho = factor factor^dagger.

    Args:
        factor: Root tensor R or full X, one Kraus index per column
        root_shape: How each column splits across the bipartition
        kraus_dim: K0, the number of columns of factor
        size: K >= K0, the size of the decomposition searched over
        options: Budget, restarts, tolerances and seed
        start: Warm start; its generator size overrides size

    Returns:
        EofResult with the best value over all restarts
    """
    options = options or EofOptions()
    factor = _normalized(factor)
    k0 = kraus_dim if kraus_dim is not None else factor.shape[1]
    if factor.shape[1] != k0:
        raise InvalidInputError(f'Factor has {factor.shape[1]} columns, expected K0 = {k0}')
    if factor.shape[0] != root_shape[0] * root_shape[1]:
        raise InvalidInputError(f'Factor rows {factor.shape[0]} do not match shape {root_shape}')

    if start is not None:
        if start.kraus_dim != k0:
            raise InvalidInputError(f'Warm start has K0={start.kraus_dim}, expected {k0}')
        k = start.size
    else:
        k = size if size is not None else k0 + options.k_extra
        if k < k0:
            raise InvalidInputError(f'K = {k} is smaller than K0 = {k0}')
        rows = None
        if options.random_rows:
            rows = np.sort(make_rng(options.seed).choice(k, size=k0, replace=False))
        start = SearchState(np.zeros((k, k), dtype=np.complex128), k0, rows)

    objective = make_objective(factor, k, start.rows, root_shape)
    x_start = start.parameters
    initial_value = objective(x_start)

    best = {'value': initial_value, 'params': x_start.copy()}
    evaluations = 1
    trace: List[float] = [initial_value]

    if k == 1:
        # single-state roof: only a global phase to vary
        return EofResult(value=initial_value, best_generator=x_start, K=k, K0=k0, M=None,
                         evaluations=evaluations, restarts_used=0, converged=True,
                         initial_value=initial_value, trace=trace)

    def tracked(params: np.ndarray) -> float:
        nonlocal evaluations
        value = objective(params)
        evaluations += 1
        if value < best['value']:
            best['value'] = value
            best['params'] = np.array(params, copy=True)
        return value

    def record(_xk: np.ndarray) -> None:
        trace.append(best['value'])

    budget = options.budget(k)
    converged = False
    restarts_used = 0
    for restart in range(options.restarts):
        if restart == 0:
            x0 = x_start
        else:
            rng = np.random.default_rng([options.seed, restart])
            x0 = x_start + rng.normal(0.0, options.perturbation, size=x_start.shape)
        before = best['value']
        result = scipy.optimize.minimize(
            tracked, x0, method='Nelder-Mead', callback=record,
            options={
                'maxfev': budget,
                'maxiter': budget,
                'fatol': options.ftol,
                'xatol': options.xtol,
                'adaptive': True,
                'initial_simplex': _initial_simplex(x0, options.simplex_step),
            })
        restarts_used += 1
        if restart == 0 or best['value'] < before:
            converged = bool(result.success)
        logger.debug(f'Restart {restart}: {result.nfev} evaluations, best {best["value"]:.10f} bits, '
                     f'success={result.success}')

    return EofResult(
        value=max(0.0, best['value']),
        best_generator=best['params'],
        K=k,
        K0=k0,
        M=None,
        evaluations=evaluations,
        restarts_used=restarts_used,
        converged=converged,
        initial_value=initial_value,
        trace=trace,
    )


def warm_start_extend(state: SearchState, grow_ensemble: bool = True) -> SearchState:
    """
    Pad A with a zero row and column: exp(i(A + 0)) = exp(iA) + 1.

    With grow_ensemble the new row of the mixer is selected as well, so a
    new Kraus column enters untouched and the old columns keep their mix.
    """
    k = state.size
    padded = np.zeros((k + 1, k + 1), dtype=np.complex128)
    padded[:k, :k] = state.generator
    if grow_ensemble:
        rows = np.append(state.rows, k)
        return SearchState(padded, state.kraus_dim + 1, rows)
    return SearchState(padded, state.kraus_dim, state.rows)


def _thermal_root(spec: ThermalSpec, max_bond: Optional[int]) -> Tuple[ComplexMatrix, RootShape, int, float]:
    x = thermal_purification(spec)
    rho_entropy = density_entropy(x)
    if max_bond is None:
        n_a, n_b = half_bipartition(x.n_sites)
        shape = (x.local_dim ** n_a, x.local_dim ** n_b)
        return x.data, shape, x.kraus_dim, rho_entropy
    tto = compress_to_root(x, max_bond)
    return tto.root, tto.bond_dims, x.kraus_dim, rho_entropy


def scan_k0(model_spec, temperature: float, k0_max: int, options: Optional[EofOptions] = None,
            max_bond: Optional[int] = None, with_k_plus_2: bool = False) -> List[ScanPoint]:
    """
    E_F of the thermal state truncated to K0 = 1..k0_max levels, K = K0.

    Each optimization starts from the previous optimum padded with zeros.
    When with_k_plus_2 is set, a second run at K = K0 + 2 is reported beside it.
    """
    options = options or EofOptions()
    points: List[ScanPoint] = []
    state: Optional[SearchState] = None

    for k0 in range(1, k0_max + 1):
        spec = ThermalSpec(model_spec, temperature, k0)
        factor, shape, k0_eff, rho_entropy = _thermal_root(spec, max_bond)

        if state is None:
            state = SearchState.zero(k0_eff)
        while state.kraus_dim < k0_eff:
            state = warm_start_extend(state)

        result = minimize_eof(factor, shape, k0_eff, options=options, start=state)
        state = SearchState.from_parameters(result.best_generator, k0_eff, result.K, state.rows)

        plus_two = None
        if with_k_plus_2:
            plus_two = minimize_eof(factor, shape, k0_eff, size=k0_eff + 2, options=options).value

        logger.info(f'K0={k0} (effective {k0_eff}): E_F={result.value:.8f} bits, S(rho)={rho_entropy:.6f}')
        points.append(ScanPoint(
            k0=k0, k=result.K, value=result.value, evaluations=result.evaluations,
            converged=result.converged, k0_effective=k0_eff, max_bond=max_bond,
            density_entropy=rho_entropy, value_k_plus_2=plus_two))
    return points


def converged_bond_dimension(points: Sequence[ScanPoint], reference: float,
                             tolerance: float = 0.01) -> Optional[int]:
    """Smallest M whose E_F is within tolerance (relative) of the reference."""
    for point in sorted(points, key=lambda p: p.max_bond or 0):
        if abs(point.value - reference) <= tolerance * abs(reference):
            return point.max_bond
    return None


def scan_m(spec: ThermalSpec, bond_dims: Sequence[int], options: Optional[EofOptions] = None) -> MScan:
    """
    E_F of the compressed root against the bond dimension M.

    The largest M must be d^{N/2}, where the compression is exact.
    """
    options = options or EofOptions()
    x = thermal_purification(spec)
    n_a, _ = half_bipartition(x.n_sites)
    exact_bond = x.local_dim ** n_a
    bond_dims = sorted(set(int(m) for m in bond_dims))
    if not bond_dims or bond_dims[-1] != exact_bond:
        raise InvalidInputError(f'Largest M must equal d^(N/2) = {exact_bond}, got {bond_dims}')

    scan = MScan()
    for m in bond_dims:
        tto = compress_to_root(x, m)
        result = minimize_eof(tto.root, tto.bond_dims, x.kraus_dim, options=options)
        logger.info(f'M={m}: E_F={result.value:.8f} bits, discarded {tto.discarded_weight:.3e}')
        scan.points.append(ScanPoint(
            k0=x.kraus_dim, k=result.K, value=result.value, evaluations=result.evaluations,
            converged=result.converged, k0_effective=x.kraus_dim, max_bond=m))

    scan.reference = scan.points[-1].value
    scan.converged_bond = converged_bond_dimension(scan.points, scan.reference)
    return scan
