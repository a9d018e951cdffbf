"""
Periodic spin-1/2 chains: Hamiltonians, exact diagonalization and
truncated thermal purifications.

Basis states are integers whose binary digits are the spins, site 0 being
the most significant bit; bit value 0 is spin up (sigma^z = +1).
"""

import logging
from dataclasses import dataclass
from functools import wraps
from typing import Optional

import numpy as np

from config import MAX_DENSE_SITES
from errors import CapacityError, InvalidInputError
from linalg import ComplexMatrix, eigh
from models import ModelSpec, ThermalSpec
from quantum_state import PurificationFactor

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-10
SPECTRUM_CACHE_SIZE = 8


@dataclass
class SpectrumSlice:
    """Lowest eigenpairs of a Hamiltonian, energies ascending."""

    energies: np.ndarray
    states: ComplexMatrix

    @property
    def count(self) -> int:
        return len(self.energies)

    @property
    def gap(self) -> Optional[float]:
        return finite_size_gap(self) if self.count >= 2 else None

    def head(self, k: int) -> 'SpectrumSlice':
        return SpectrumSlice(self.energies[:k], self.states[:, :k])


def _bit_positions(n_sites: int) -> np.ndarray:
    return n_sites - 1 - np.arange(n_sites)


def _spins(n_sites: int) -> np.ndarray:
    """sigma^z eigenvalue of every site for every basis state, shape (dim, N)."""
    states = np.arange(2 ** n_sites)
    bits = (states[:, None] >> _bit_positions(n_sites)[None, :]) & 1
    return 1 - 2 * bits


def build_hamiltonian(spec: ModelSpec) -> ComplexMatrix:
    """
    Dense Hamiltonian of a periodic chain with prefactor J.

    Ising: J sum_j (sx_j sx_{j+1} + h sz_j)
    XXZ:   J sum_j (sx_j sx_{j+1} + sy_j sy_{j+1} + xi sz_j sz_{j+1})

    Site N+1 is site 1, so the single bond of N = 2 is counted twice.
    """
    n = spec.n_sites
    if n > MAX_DENSE_SITES:
        raise CapacityError(f'N = {n} exceeds the dense limit of {MAX_DENSE_SITES} sites')

    dim = 2 ** n
    states = np.arange(dim)
    spins = _spins(n)
    positions = _bit_positions(n)
    h = np.zeros((dim, dim), dtype=np.float64)

    for j in range(n):
        k = (j + 1) % n
        mask = (1 << int(positions[j])) | (1 << int(positions[k]))
        if spec.kind == 'ising':
            # sx sx flips both spins of the bond
            np.add.at(h, (states ^ mask, states), spec.coupling)
        else:
            antiparallel = spins[:, j] != spins[:, k]
            flipped = states[antiparallel]
            # (sx sx + sy sy) |ud> = 2 |du>
            np.add.at(h, (flipped ^ mask, flipped), 2.0 * spec.coupling)
            h[states, states] += spec.coupling * spec.xi * spins[:, j] * spins[:, k]

    if spec.kind == 'ising':
        h[states, states] += spec.coupling * spec.h * spins.sum(axis=1)

    return h.astype(np.complex128)


def translation_operator(n_sites: int) -> np.ndarray:
    """Permutation matrix moving the spin on site j to site j+1 (mod N)."""
    dim = 2 ** n_sites
    states = np.arange(dim)
    # site j -> j+1 moves every bit one position less significant, the last wraps
    shifted = (states >> 1) | ((states & 1) << (n_sites - 1))
    t = np.zeros((dim, dim))
    t[shifted, states] = 1.0
    return t


def low_spectrum(h: ComplexMatrix, k: int) -> SpectrumSlice:
    """The k lowest eigenpairs of h."""
    if k < 1 or k > h.shape[0]:
        raise InvalidInputError(f'k must lie in [1, {h.shape[0]}], got {k}')
    result = eigh(h, count=k)
    return SpectrumSlice(result.eigenvalues, result.eigenvectors)


def finite_size_gap(spectrum: SpectrumSlice) -> float:
    """E_1 - E_0 of the first two sorted energies, degenerate or not."""
    if spectrum.count < 2:
        raise InvalidInputError('The gap needs at least two energies')
    return float(max(0.0, spectrum.energies[1] - spectrum.energies[0]))


# Exact diagonalization dominates every thermal run; results are reused
# between K0 and M scans of the same chain.
_spectrum_cache = {}


def cache_spectrum(max_entries=SPECTRUM_CACHE_SIZE):
    """Memoize (ModelSpec, k) -> SpectrumSlice, serving smaller k from larger entries."""
    def decorator(func):
        @wraps(func)
        def wrapper(spec: ModelSpec, k: int) -> SpectrumSlice:
            k = min(k, spec.hilbert_dim)
            cached = _spectrum_cache.get(spec)
            if cached is not None and cached.count >= k:
                return cached.head(k)

            result = func(spec, k)
            _spectrum_cache.pop(spec, None)
            _spectrum_cache[spec] = result

            # Simple eviction: drop the oldest entries
            while len(_spectrum_cache) > max_entries:
                del _spectrum_cache[next(iter(_spectrum_cache))]
            return result
        wrapper.cache_clear = _spectrum_cache.clear  # type: ignore[attr-defined]
        return wrapper
    return decorator


@cache_spectrum()
def model_spectrum(spec: ModelSpec, k: int) -> SpectrumSlice:
    """Build and diagonalize the chain, keeping the k lowest levels."""
    logger.info(f'Diagonalizing {spec.tag()} N={spec.n_sites} (dim {spec.hilbert_dim}, k={k})')
    return low_spectrum(build_hamiltonian(spec), k)


def _extend_to_multiplet(energies: np.ndarray, k0: int) -> int:
    """Smallest K >= k0 not separating levels equal within DEGENERACY_TOL."""
    k = k0
    while k < len(energies):
        scale = max(1.0, abs(float(energies[k - 1])))
        if energies[k] - energies[k - 1] > DEGENERACY_TOL * scale:
            break
        k += 1
    return k


def thermal_purification(spec: ThermalSpec, include_degenerate: bool = True) -> PurificationFactor:
    """
    Truncated Gibbs state as a purification factor.

    Columns are sqrt(exp(-E_j / T) / Z) |psi_j> for the K0 lowest levels,
    Z summing the retained weights only. With include_degenerate, K0 grows
    until the cut no longer splits a degenerate multiplet.
    """
    model = spec.model
    k0 = spec.kraus_dim
    k = k0
    if include_degenerate:
        margin = 8
        while True:
            available = min(model.hilbert_dim, k0 + margin)
            spectrum = model_spectrum(model, available)
            k = _extend_to_multiplet(spectrum.energies, k0)
            if k < available or available == model.hilbert_dim:
                break
            margin *= 2
        if k != k0:
            logger.info(f'K0 raised from {k0} to {k} to keep a degenerate multiplet whole')

    spectrum = model_spectrum(model, k)
    shifted = spectrum.energies - spectrum.energies[0]
    weights = np.exp(-shifted / spec.temperature)
    probabilities = weights / np.sum(weights)
    columns = spectrum.states * np.sqrt(probabilities)
    return PurificationFactor(columns, model.n_sites, model.local_dim)


def free_fermion_ground_energy(n_sites: int, h: float, coupling: float = 1.0) -> float:
    """
    Ground energy of the periodic Ising chain J sum (sx sx + h sz) for even N.

    Jordan-Wigner fermions: the even parity sector takes antiperiodic momenta,
    the odd sector periodic ones with the unpaired k = 0, pi modes filled to
    reach odd fermion number. The lower of the two sectors is returned.
    """
    if n_sites < 2 or n_sites % 2:
        raise InvalidInputError(f'The free-fermion oracle needs an even N >= 2, got {n_sites}')

    j, g, n = abs(coupling), abs(h), n_sites

    def mode_energy(k):
        return 2.0 * np.sqrt(j ** 2 + g ** 2 - 2.0 * j * g * np.cos(k))

    k_even = np.pi * (2 * np.arange(n) + 1) / n
    e_even = -0.5 * float(np.sum(mode_energy(k_even)))

    k_odd = 2.0 * np.pi * np.arange(n) / n
    paired = k_odd[(k_odd != 0) & ~np.isclose(k_odd, np.pi)]
    pair_energy = -0.5 * float(np.sum(mode_energy(paired)))
    unpaired = [-2.0 * j, 2.0 * j]
    if len(paired):
        unpaired.append(-2.0 * g + float(np.min(mode_energy(paired))))
    e_odd = pair_energy + min(unpaired)

    return min(e_even, e_odd)
