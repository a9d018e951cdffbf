"""
Tests for the convex-roof search.
"""

import numpy as np
import pytest

from eof import (
    SearchState, apply_mixer, average_entanglement, build_mixer, generator_from_params,
    make_objective, minimize_eof, params_from_generator, scan_k0, scan_m, warm_start_extend,
)
from errors import InvalidInputError
from linalg import ginibre_matrix, hermitian_defect
from models import EofOptions, ModelSpec, ThermalSpec
from oracles import binary_entropy, concurrence_eof_2qubit, ghz_mixture, random_dm_hilbert_schmidt
from quantum_state import PurificationFactor
from spin_models import model_spectrum, thermal_purification
from tto import compress_to_root, entanglement_entropy

BELL_09 = binary_entropy(0.8)  # 0.7219 bits


def random_state(k, k0, seed):
    rng = np.random.default_rng(seed)
    return SearchState.from_parameters(rng.normal(size=k * k), k0, k)


def test_generator_layout():
    a = generator_from_params(np.arange(9, dtype=float), 3)
    assert hermitian_defect(a) == 0.0
    np.testing.assert_allclose(np.diag(a).real, [0, 1, 2])
    assert a[0, 1] == 3 + 6j
    assert a[1, 2] == 5 + 8j
    np.testing.assert_allclose(params_from_generator(a), np.arange(9))


def test_mixer_is_a_right_isometry():
    mixer = build_mixer(random_state(5, 3, seed=1))
    assert mixer.shape == (3, 5)
    assert np.max(np.abs(mixer @ mixer.conj().T - np.eye(3))) < 1e-12


def test_new_ensemble_reconstructs_rho():
    x = PurificationFactor.from_columns(ginibre_matrix(16, 3, seed=2), 4)
    ensemble = apply_mixer(x.data, build_mixer(random_state(5, 3, seed=3)))
    rho = x.data @ x.data.conj().T
    assert ensemble.size == 5
    assert np.max(np.abs(ensemble.density_matrix() - rho)) < 1e-10


def test_average_entanglement_of_bell_columns():
    x = ghz_mixture(2, 0.5)
    ensemble = apply_mixer(x.data, np.eye(2))
    assert average_entanglement(ensemble, (2, 2)) == pytest.approx(1.0)


def test_objective_ignores_a_shift_of_the_diagonal():
    """A + c 1 only adds a global phase to exp(iA)."""
    x = PurificationFactor.from_columns(ginibre_matrix(16, 3, seed=21), 4)
    objective = make_objective(x.data, 5, np.arange(3), (4, 4))
    params = np.random.default_rng(22).normal(size=25)
    shifted = params.copy()
    shifted[:5] += 0.7
    assert objective(shifted) == pytest.approx(objective(params), rel=1e-10, abs=1e-12)


def test_pure_state_gives_its_entropy():
    psi = ginibre_matrix(16, 1, seed=4)
    x = PurificationFactor.from_columns(psi, 4)
    expected = entanglement_entropy(x.data[:, 0], (2, 2))
    for k in (1, 3):
        result = minimize_eof(x.data, (4, 4), size=k, options=EofOptions(max_evals=50, restarts=1))
        assert result.value == pytest.approx(expected, abs=1e-10)


def test_bell_mixture_half_is_separable():
    result = minimize_eof(ghz_mixture(2, 0.5).data, (2, 2))
    assert result.value <= 1e-6


def test_bell_mixture_matches_closed_form():
    options = EofOptions(max_evals=4000, ftol=1e-12, xtol=1e-10)
    result = minimize_eof(ghz_mixture(2, 0.9).data, (2, 2), options=options)
    assert result.value == pytest.approx(BELL_09, abs=1e-4)
    assert result.value >= BELL_09 - 1e-9
    assert result.initial_value >= result.value


def test_ghz_mixture_behaves_like_bell_mixture():
    options = EofOptions(max_evals=1500, restarts=2)
    bell = minimize_eof(ghz_mixture(2, 0.8).data, (2, 2), options=options).value
    ghz = minimize_eof(ghz_mixture(4, 0.8).data, (4, 4), options=options).value
    assert ghz == pytest.approx(bell, abs=1e-5)


def test_result_is_an_upper_bound():
    """Every evaluated point bounds the EoF from above, converged or not."""
    for seed in range(5):
        rho = random_dm_hilbert_schmidt(4, seed)
        x = rho.purification(2)
        result = minimize_eof(x.data, (2, 2), options=EofOptions(max_evals=60, restarts=1))
        assert result.value >= concurrence_eof_2qubit(rho) - 1e-9
        assert result.evaluations <= 61


def test_best_value_never_worse_with_more_restarts():
    rho = random_dm_hilbert_schmidt(4, 7)
    x = rho.purification(2)
    one = minimize_eof(x.data, (2, 2), options=EofOptions(max_evals=100, restarts=1, seed=3))
    three = minimize_eof(x.data, (2, 2), options=EofOptions(max_evals=100, restarts=3, seed=3))
    assert three.value <= one.value


def test_search_is_deterministic():
    x = ghz_mixture(2, 0.7).data
    options = EofOptions(max_evals=300, seed=9, k_extra=1, random_rows=True)
    first = minimize_eof(x, (2, 2), options=options)
    second = minimize_eof(x, (2, 2), options=options)
    assert first.K == 3
    assert first.value == second.value
    np.testing.assert_array_equal(first.best_generator, second.best_generator)


def test_warm_start_keeps_objective():
    x = PurificationFactor.from_columns(ginibre_matrix(16, 2, seed=5), 4).data
    state = random_state(2, 2, seed=6)
    before = make_objective(x, 2, state.rows, (4, 4))(state.parameters)

    wider = warm_start_extend(state, grow_ensemble=False)
    assert (wider.size, wider.kraus_dim) == (3, 2)
    after = make_objective(x, 3, wider.rows, (4, 4))(wider.parameters)
    assert after == pytest.approx(before, abs=1e-12)

    grown = warm_start_extend(state)
    padded = np.hstack([x, np.zeros((16, 1))])
    after = make_objective(padded, 3, grown.rows, (4, 4))(grown.parameters)
    assert (grown.size, grown.kraus_dim) == (3, 3)
    assert after == pytest.approx(before, abs=1e-12)


def test_search_state_validation():
    with pytest.raises(InvalidInputError):
        SearchState(np.zeros((2, 2)), 3)
    with pytest.raises(InvalidInputError):
        SearchState(np.array([[0, 1], [0, 0]]), 1)
    with pytest.raises(InvalidInputError):
        SearchState(np.zeros((3, 3)), 2, rows=np.array([1, 1]))


def test_minimize_rejects_mismatched_shapes():
    with pytest.raises(InvalidInputError):
        minimize_eof(ghz_mixture(2, 0.5).data, (2, 4))
    with pytest.raises(InvalidInputError):
        minimize_eof(ghz_mixture(2, 0.5).data, (2, 2), size=1)


def test_root_and_full_factor_agree():
    """The branches are isometries, so the search sees the same landscape."""
    spec = ThermalSpec(ModelSpec('ising', 6, h=1.0), 0.1, 2)
    x = thermal_purification(spec)
    tto = compress_to_root(x, max_bond=8)
    options = EofOptions(max_evals=400, restarts=1)
    full = minimize_eof(x.data, (8, 8), options=options).value
    root = minimize_eof(tto.root, tto.bond_dims, options=options).value
    assert root == pytest.approx(full, abs=1e-6)


def test_scan_k0_starts_from_ground_state_entropy():
    model = ModelSpec('ising', 4, h=1.0)
    points = scan_k0(model, 0.2, 3, EofOptions(max_evals=300, restarts=1))
    ground = model_spectrum(model, 1).states[:, 0]

    assert [p.k0 for p in points] == [1, 2, 3]
    assert points[0].value == pytest.approx(entanglement_entropy(ground, (2, 2)), abs=1e-10)
    assert all(p.k0_effective >= p.k0 for p in points)
    assert points[0].density_entropy == pytest.approx(0.0, abs=1e-12)


def test_scan_m_requires_exact_bond():
    spec = ThermalSpec(ModelSpec('ising', 4, h=1.0), 0.1, 2)
    with pytest.raises(InvalidInputError):
        scan_m(spec, [1, 2, 3])

    scan = scan_m(spec, [1, 2, 4], EofOptions(max_evals=300, restarts=1))
    assert [p.max_bond for p in scan.points] == [1, 2, 4]
    assert scan.reference == scan.points[-1].value
    assert scan.converged_bond in (1, 2, 4)
    assert scan.points[0].value == pytest.approx(0.0, abs=1e-12)
