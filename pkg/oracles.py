"""
Benchmark state families and their exact entanglement of formation.

Two-qubit states are checked against the Wootters concurrence; Werner and
isotropic states in d = 3 use the closed forms known from the literature.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from errors import InvalidInputError, UnsupportedError
from linalg import Seed, ginibre_matrix, haar_random_unitary, make_rng
from quantum_state import STATE_TOL, DensityMatrix, PurificationFactor

logger = logging.getLogger(__name__)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)

# Where the exact value of each family comes from
PROVENANCE = {
    'bell': 'concurrence',
    'ghz': 'concurrence',
    'random-pure': 'concurrence (N=2 only)',
    'hs-random': 'concurrence',
    'separable': 'separable by construction',
    'werner': 'concurrence (d=2), closed form (d=3)',
    'isotropic': 'concurrence (d=2), closed form (d=3)',
}
FAMILIES = tuple(PROVENANCE)
REFERENCE_DIMS = (2, 3)


@dataclass
class BenchmarkInstance:
    """One generated state with its exact EoF when an oracle exists."""

    family: str
    parameters: Dict[str, Any]
    factor: PurificationFactor
    root_shape: tuple
    exact_eof: Optional[float] = None
    density: Optional[DensityMatrix] = None
    provenance: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def binary_entropy(x: float) -> float:
    """h2(x) = -x log2 x - (1-x) log2(1-x), zero at the end points."""
    x = float(np.clip(x, 0.0, 1.0))
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state."""
    if rho.dim != 4:
        raise InvalidInputError(f'Concurrence needs a 4 x 4 density matrix, got dim {rho.dim}')
    data = 0.5 * (rho.data + rho.data.conj().T)
    flipped = SPIN_FLIP @ data.conj() @ SPIN_FLIP

    # sqrt(rho) flipped sqrt(rho) is Hermitian and shares the spectrum of rho flipped
    w, v = np.linalg.eigh(data)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    product = root @ flipped @ root
    eigenvalues = np.linalg.eigvalsh(0.5 * (product + product.conj().T))
    lambdas = np.sort(np.sqrt(np.clip(eigenvalues, 0.0, None)))[::-1]
    return float(max(0.0, lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))


def concurrence_eof_2qubit(rho: DensityMatrix) -> float:
    """Exact EoF in bits via h2((1 + sqrt(1 - C^2)) / 2)."""
    c = concurrence(rho)
    return binary_entropy(0.5 * (1.0 + np.sqrt(max(0.0, 1.0 - c * c))))


def _check_weight(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f'Mixing weight must lie in [0, 1], got {lam}')


def ghz_pair(n_sites: int) -> np.ndarray:
    """Columns GHZ+ and GHZ- of N qubits, (|up...up> +- |down...down>) / sqrt(2)."""
    if n_sites < 2:
        raise InvalidInputError(f'GHZ states need N >= 2, got {n_sites}')
    dim = 2 ** n_sites
    pair = np.zeros((dim, 2), dtype=np.complex128)
    pair[0, :] = 1.0 / np.sqrt(2.0)
    pair[dim - 1, 0] = 1.0 / np.sqrt(2.0)
    pair[dim - 1, 1] = -1.0 / np.sqrt(2.0)
    return pair


def ghz_mixture(n_sites: int, lam: float) -> PurificationFactor:
    """lam |GHZ+><GHZ+| + (1 - lam) |GHZ-><GHZ-| with K0 = 2, or 1 at the end points."""
    _check_weight(lam)
    weights = np.array([lam, 1.0 - lam])
    keep = weights > 0
    columns = ghz_pair(n_sites)[:, keep] * np.sqrt(weights[keep])
    return PurificationFactor(columns, n_sites)


def bell_mixture(lam: float) -> DensityMatrix:
    """lam |phi+><phi+| + (1 - lam) |phi-><phi-|."""
    return ghz_mixture(2, lam).density_matrix()


def random_pure_ensemble(n_sites: int, kraus_dim: int, seed: Seed) -> PurificationFactor:
    """K0 Haar-random pure states of N qubits, each with weight 1/K0."""
    if kraus_dim < 1:
        raise InvalidInputError(f'K0 must be >= 1, got {kraus_dim}')
    rng = make_rng(seed)
    dim = 2 ** n_sites
    # first column of a Haar unitary is a Haar-random state
    columns = np.column_stack([haar_random_unitary(dim, rng)[:, 0] for _ in range(kraus_dim)])
    return PurificationFactor(columns / np.sqrt(kraus_dim), n_sites)


def random_dm_hilbert_schmidt(dim: int, seed: Seed) -> DensityMatrix:
    """rho = G G^dagger / Tr(G G^dagger) for a square Ginibre matrix G."""
    if dim < 2:
        raise InvalidInputError(f'dim must be >= 2, got {dim}')
    g = ginibre_matrix(dim, dim, seed)
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.real(np.trace(rho)))


def random_separable(n_sites: int, seed: Seed, max_terms: int = 4) -> DensityMatrix:
    """
    sum_i p_i rho_i^A (x) rho_i^B across the half-chain cut.

    The number of terms is uniform in 1..max_terms; the weights are
    uniform draws divided by their sum.
    """
    if n_sites < 2 or n_sites % 2:
        raise InvalidInputError(f'Random separable states need an even N, got {n_sites}')
    rng = make_rng(seed)
    half = 2 ** (n_sites // 2)
    terms = int(rng.integers(1, max_terms + 1))
    weights = rng.uniform(size=terms)
    weights = weights / weights.sum()

    rho = np.zeros((half * half, half * half), dtype=np.complex128)
    for p in weights:
        rho_a = random_dm_hilbert_schmidt(half, rng).data
        rho_b = random_dm_hilbert_schmidt(half, rng).data
        rho += p * np.kron(rho_a, rho_b)
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def swap_operator(d: int) -> np.ndarray:
    """F = sum_ij |ij><ji| on C^d (x) C^d."""
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing='ij')
    swap = np.zeros((d * d, d * d))
    swap[(i * d + j).ravel(), (j * d + i).ravel()] = 1.0
    return swap


def maximally_entangled(d: int) -> np.ndarray:
    """|psi+> = d^{-1/2} sum_i |ii>."""
    psi = np.zeros(d * d, dtype=np.complex128)
    psi[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return psi


def werner_state(d: int, f: float) -> DensityMatrix:
    """[(d - f) 1 + (d f - 1) F] / (d (d^2 - 1)), so that Tr(F rho) = f."""
    if d < 2:
        raise InvalidInputError(f'Local dimension must be >= 2, got {d}')
    if not -1.0 <= f <= 1.0:
        raise InvalidInputError(f'Werner parameter must lie in [-1, 1], got {f}')
    rho = ((d - f) * np.eye(d * d) + (d * f - 1.0) * swap_operator(d)) / (d * (d * d - 1))
    return DensityMatrix(rho.astype(np.complex128))


def isotropic_state(d: int, f: float) -> DensityMatrix:
    """(1 - f)/(d^2 - 1) (1 - P+) + f P+, so that <psi+|rho|psi+> = f."""
    if d < 2:
        raise InvalidInputError(f'Local dimension must be >= 2, got {d}')
    if not 0.0 <= f <= 1.0:
        raise InvalidInputError(f'Isotropic fidelity must lie in [0, 1], got {f}')
    psi = maximally_entangled(d)
    projector = np.outer(psi, psi.conj())
    rho = (1.0 - f) / (d * d - 1) * (np.eye(d * d) - projector) + f * projector
    return DensityMatrix(rho)


def werner_eof(f: float) -> float:
    """Exact EoF of a Werner state in bits; zero for f >= 0, independent of d."""
    if f >= 0:
        return 0.0
    return binary_entropy(0.5 * (1.0 - np.sqrt(1.0 - f * f)))


def isotropic_eof(d: int, f: float) -> float:
    """
    Exact EoF of an isotropic state with d >= 3, in bits.

    Zero up to f = 1/d; the convex hull of
    R(f) = h2(g) + (1 - g) log2(d - 1), g = [sqrt(f) + sqrt((d-1)(1-f))]^2 / d,
    up to f = 4(d-1)/d^2, then the straight line ending at log2 d for f = 1.
    """
    if d < 3:
        raise UnsupportedError('Closed-form isotropic EoF is used for d >= 3 only')
    if f <= 1.0 / d:
        return 0.0
    if f <= 4.0 * (d - 1) / d ** 2:
        gamma = (np.sqrt(f) + np.sqrt((d - 1) * (1.0 - f))) ** 2 / d
        gamma = min(gamma, 1.0)
        return max(0.0, binary_entropy(gamma) + (1.0 - gamma) * np.log2(d - 1))
    return float(d * np.log2(d - 1) / (d - 2) * (f - 1.0) + np.log2(d))


def reference_eof_curve(family: str, d: int, f_grid: Iterable[float]) -> List[float]:
    """Exact EoF along an f-grid for the Werner or isotropic family."""
    if family not in ('werner', 'isotropic'):
        raise UnsupportedError(f'No reference curve for family {family!r}')
    if d not in REFERENCE_DIMS:
        raise UnsupportedError(f'Reference curves exist for d in {REFERENCE_DIMS}, got {d}')

    values = []
    for f in f_grid:
        if d == 2:
            state = werner_state(d, f) if family == 'werner' else isotropic_state(d, f)
            values.append(concurrence_eof_2qubit(state))
        elif family == 'werner':
            werner_state(d, f)  # range check
            values.append(werner_eof(f))
        else:
            isotropic_state(d, f)
            values.append(isotropic_eof(d, f))
    return values


def separable_fraction(exact_values: Sequence[float], tol: float = 1e-12) -> float:
    """Share of instances whose exact EoF vanishes."""
    values = np.asarray(list(exact_values), dtype=float)
    if values.size == 0:
        raise InvalidInputError('No instances to count')
    return float(np.mean(values <= tol))


def _two_site_instance(family: str, parameters: Dict[str, Any], rho: DensityMatrix,
                       d: int = 2, exact: Optional[float] = None) -> BenchmarkInstance:
    if exact is None and d == 2:
        exact = concurrence_eof_2qubit(rho)
    return BenchmarkInstance(
        family=family,
        parameters=parameters,
        factor=rho.purification(2, d),
        root_shape=(d, d),
        exact_eof=exact,
        density=rho,
        provenance=PROVENANCE[family],
    )


def _bell(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    lam = float(params['lambda'])
    # the two Bell columns themselves, not an eigenbasis of rho
    factor = ghz_mixture(2, lam)
    rho = factor.density_matrix()
    return BenchmarkInstance('bell', {'lambda': lam}, factor, (2, 2),
                             concurrence_eof_2qubit(rho), rho, PROVENANCE['bell'])


def _ghz(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    lam, n = float(params['lambda']), int(params['N'])
    factor = ghz_mixture(n, lam)
    half = 2 ** (n // 2)
    return BenchmarkInstance('ghz', {'lambda': lam, 'N': n}, factor, (half, 2 ** n // half),
                             concurrence_eof_2qubit(bell_mixture(lam)), None, PROVENANCE['ghz'])


def _random_pure(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    n, k0 = int(params.get('N', 2)), int(params['K0'])
    factor = random_pure_ensemble(n, k0, seed)
    half = 2 ** (n // 2)
    exact = concurrence_eof_2qubit(factor.density_matrix()) if n == 2 else None
    return BenchmarkInstance('random-pure', {'N': n, 'K0': k0}, factor, (half, 2 ** n // half),
                             exact, None, PROVENANCE['random-pure'] if exact is not None else None)


def _hs_random(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    dim = int(params.get('dim', 4))
    if dim != 4:
        raise UnsupportedError(f'Hilbert-Schmidt benchmarks are two-qubit only, got dim {dim}')
    return _two_site_instance('hs-random', {'dim': dim}, random_dm_hilbert_schmidt(dim, seed))


def _separable(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    n = int(params.get('N', 2))
    rho = random_separable(n, seed)
    half = 2 ** (n // 2)
    factor = rho.purification(n)
    return BenchmarkInstance('separable', {'N': n}, factor, (half, half), 0.0, rho,
                             PROVENANCE['separable'])


def _werner(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    d, f = int(params.get('d', 2)), float(params['f'])
    exact = reference_eof_curve('werner', d, [f])[0]
    return _two_site_instance('werner', {'d': d, 'f': f}, werner_state(d, f), d, exact)


def _isotropic(params: Dict[str, Any], seed: Seed) -> BenchmarkInstance:
    d, f = int(params.get('d', 2)), float(params['f'])
    exact = reference_eof_curve('isotropic', d, [f])[0]
    return _two_site_instance('isotropic', {'d': d, 'f': f}, isotropic_state(d, f), d, exact)


_GENERATORS: Dict[str, Callable[[Dict[str, Any], Seed], BenchmarkInstance]] = {
    'bell': _bell,
    'ghz': _ghz,
    'random-pure': _random_pure,
    'hs-random': _hs_random,
    'separable': _separable,
    'werner': _werner,
    'isotropic': _isotropic,
}


def make_instance(family: str, parameters: Dict[str, Any], seed: Seed = 0) -> BenchmarkInstance:
    """Generate one benchmark state of the named family."""
    generator = _GENERATORS.get(family)
    if generator is None:
        raise UnsupportedError(f'Unknown benchmark family {family!r}; choose from {", ".join(FAMILIES)}')
    try:
        instance = generator(parameters, seed)
    except KeyError as exc:
        raise InvalidInputError(f'Family {family!r} needs parameter {exc.args[0]!r}')
    if abs(instance.factor.trace - 1.0) > STATE_TOL:
        raise InvalidInputError(f'Generated {family} state is not normalized')
    logger.debug(f'Generated {family} instance {instance.parameters} seed={seed}')
    return instance
