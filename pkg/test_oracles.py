"""
Tests for the benchmark families and exact EoF oracles.
"""

import numpy as np
import pytest

from errors import InvalidInputError, UnsupportedError
from linalg import haar_random_unitary
from oracles import (
    SPIN_FLIP, bell_mixture, binary_entropy, concurrence, concurrence_eof_2qubit, ghz_mixture,
    isotropic_eof, isotropic_state, make_instance, maximally_entangled, random_dm_hilbert_schmidt,
    random_pure_ensemble, random_separable, reference_eof_curve, separable_fraction,
    swap_operator, werner_eof, werner_state,
)
from quantum_state import DensityMatrix


def test_binary_entropy():
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.8) == pytest.approx(0.7219280948873623)


def test_concurrence_of_reference_states():
    bell = maximally_entangled(2)
    assert concurrence_eof_2qubit(DensityMatrix(np.outer(bell, bell.conj()))) == pytest.approx(1.0)
    assert concurrence_eof_2qubit(DensityMatrix(np.eye(4) / 4)) == 0.0
    assert concurrence_eof_2qubit(bell_mixture(0.9)) == pytest.approx(0.7219280948873623, abs=1e-6)
    assert concurrence_eof_2qubit(bell_mixture(0.5)) == pytest.approx(0.0, abs=1e-12)


def test_concurrence_needs_two_qubits():
    with pytest.raises(InvalidInputError):
        concurrence(DensityMatrix(np.eye(9) / 9))


def test_concurrence_is_spin_flip_symmetric():
    for seed in range(5):
        rho = random_dm_hilbert_schmidt(4, seed)
        flipped = DensityMatrix(SPIN_FLIP @ rho.data.conj() @ SPIN_FLIP)
        assert concurrence_eof_2qubit(flipped) == pytest.approx(concurrence_eof_2qubit(rho), abs=1e-10)


def test_bell_and_ghz_mixtures():
    assert ghz_mixture(4, 1.0).kraus_dim == 1
    assert ghz_mixture(4, 0.0).kraus_dim == 1
    assert ghz_mixture(4, 0.3).kraus_dim == 2
    np.testing.assert_allclose(bell_mixture(0.5).data, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)
    with pytest.raises(InvalidInputError):
        bell_mixture(1.2)


def test_random_generators_are_valid_and_seeded():
    x = random_pure_ensemble(3, 4, seed=1)
    assert x.trace == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(x.probabilities, 0.25, atol=1e-12)
    np.testing.assert_array_equal(x.data, random_pure_ensemble(3, 4, seed=1).data)

    rho = random_dm_hilbert_schmidt(4, seed=2)
    assert np.linalg.eigvalsh(rho.data).min() >= -1e-12
    assert rho.purification(2).kraus_dim == 4

    sep = random_separable(4, seed=3)
    assert sep.dim == 16
    with pytest.raises(InvalidInputError):
        random_separable(3, seed=3)


def test_random_separable_states_have_zero_concurrence():
    for seed in range(10):
        assert concurrence_eof_2qubit(random_separable(2, seed)) == pytest.approx(0.0, abs=1e-10)


def test_werner_state_properties():
    swap = swap_operator(3)
    for f in (-1.0, -0.3, 0.0, 0.6, 1.0):
        rho = werner_state(3, f)
        assert np.trace(swap @ rho.data).real == pytest.approx(f, abs=1e-12)

    singlet = werner_state(2, -1.0)
    assert concurrence_eof_2qubit(singlet) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(InvalidInputError):
        werner_state(2, 1.5)


def test_werner_and_isotropic_symmetry():
    rho_w = werner_state(3, -0.4).data
    rho_i = isotropic_state(3, 0.7).data
    rng = np.random.default_rng(4)
    for _ in range(10):
        u = haar_random_unitary(3, rng)
        uu = np.kron(u, u)
        uu_conj = np.kron(u, u.conj())
        assert np.linalg.norm(uu @ rho_w @ uu.conj().T - rho_w) <= 1e-10
        assert np.linalg.norm(uu_conj @ rho_i @ uu_conj.conj().T - rho_i) <= 1e-10


def test_isotropic_state_properties():
    d = 3
    assert np.allclose(isotropic_state(d, 1 / d ** 2).data, np.eye(d * d) / d ** 2)
    psi = maximally_entangled(d)
    rho = isotropic_state(d, 0.4)
    assert (psi.conj() @ rho.data @ psi).real == pytest.approx(0.4)
    with pytest.raises(InvalidInputError):
        isotropic_state(d, -0.1)


def test_two_qubit_closed_forms_agree_with_concurrence():
    for f in (-1.0, -0.75, -0.5, -0.25, 0.0, 0.5, 1.0):
        assert concurrence_eof_2qubit(werner_state(2, f)) == pytest.approx(werner_eof(f), abs=1e-10)
    for f in (0.0, 0.5, 0.7, 0.9, 1.0):
        c = max(0.0, 2 * f - 1)
        expected = binary_entropy(0.5 * (1 + np.sqrt(1 - c * c)))
        assert concurrence_eof_2qubit(isotropic_state(2, f)) == pytest.approx(expected, abs=1e-10)


def test_reference_curves():
    assert reference_eof_curve('werner', 3, [0.5]) == [0.0]
    assert reference_eof_curve('isotropic', 3, [1 / 3])[0] == 0.0
    assert reference_eof_curve('isotropic', 3, [1.0])[0] == pytest.approx(np.log2(3))
    assert reference_eof_curve('werner', 3, [-1.0])[0] == pytest.approx(1.0)

    # the two branches of the isotropic curve meet at f = 8/9
    below = isotropic_eof(3, 8 / 9 - 1e-9)
    above = isotropic_eof(3, 8 / 9 + 1e-9)
    assert below == pytest.approx(above, abs=1e-6)

    curve = reference_eof_curve('isotropic', 3, np.linspace(0.34, 1.0, 12))
    assert all(b >= a - 1e-12 for a, b in zip(curve, curve[1:]))

    with pytest.raises(UnsupportedError):
        reference_eof_curve('werner', 4, [0.0])
    with pytest.raises(UnsupportedError):
        reference_eof_curve('bell', 2, [0.0])


def test_separable_fraction():
    assert separable_fraction([0.0, 0.0, 0.3, 1.0]) == 0.5
    with pytest.raises(InvalidInputError):
        separable_fraction([])


def test_make_instance():
    bell = make_instance('bell', {'lambda': 0.9})
    assert bell.exact_eof == pytest.approx(0.7219280948873623, abs=1e-6)
    assert bell.root_shape == (2, 2)

    ghz = make_instance('ghz', {'lambda': 0.9, 'N': 4})
    assert ghz.root_shape == (4, 4)
    assert ghz.exact_eof == pytest.approx(bell.exact_eof)

    pure = make_instance('random-pure', {'N': 4, 'K0': 2}, seed=1)
    assert pure.exact_eof is None

    werner = make_instance('werner', {'d': 3, 'f': -0.5})
    assert werner.root_shape == (3, 3)
    assert werner.factor.local_dim == 3

    assert make_instance('separable', {'N': 2}, seed=2).exact_eof == 0.0

    with pytest.raises(UnsupportedError):
        make_instance('nope', {})
    with pytest.raises(InvalidInputError):
        make_instance('bell', {})
