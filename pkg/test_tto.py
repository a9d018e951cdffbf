"""
Tests for the depth-one tree tensor operator and entropy helpers.
"""

import numpy as np
import pytest

from errors import InvalidInputError
from linalg import ginibre_matrix, isometry_defect
from models import ModelSpec, ThermalSpec
from oracles import ghz_mixture
from quantum_state import PurificationFactor
from spin_models import thermal_purification
from tto import (
    column_entropies, compress_to_root, density_entropy, entanglement_entropy, half_bipartition,
    root_column_entropies, spectrum_entropies,
)


def random_factor(n_sites, kraus_dim, seed):
    return PurificationFactor.from_columns(ginibre_matrix(2 ** n_sites, kraus_dim, seed), n_sites)


def test_full_bond_compression_is_exact():
    x = random_factor(6, 3, seed=11)
    tto = compress_to_root(x, max_bond=8)

    assert tto.bond_dims == (8, 8)
    assert tto.discarded_weight < 1e-20
    assert np.max(np.abs(tto.reconstruct() - x.data)) < 1e-10
    assert isometry_defect(tto.branch_left) < 1e-10
    assert isometry_defect(tto.branch_right) < 1e-10


def test_truncation_error_is_the_discarded_weight():
    """Both truncations are orthogonal, so their weights add up exactly."""
    x = random_factor(6, 2, seed=12)
    tto = compress_to_root(x, max_bond=4)
    error = np.linalg.norm(tto.reconstruct() - x.data) ** 2

    assert tto.bond_dims == (4, 4)
    assert error == pytest.approx(tto.discarded_weight, rel=1e-8, abs=1e-14)


def test_root_keeps_column_entanglement():
    """Isometric branches leave every Schmidt spectrum unchanged."""
    x = random_factor(6, 3, seed=13)
    tto = compress_to_root(x, max_bond=8)
    from_root = [s for _, s in root_column_entropies(tto)]
    from_full = column_entropies(x.data, (8, 8))
    np.testing.assert_allclose(from_root, from_full, atol=1e-10)


def test_renyi_brackets_von_neumann_near_one():
    report = spectrum_entropies([0.5, 0.3, 0.2], alphas=[1 - 1e-4, 1 + 1e-4])
    below, above = report.renyi[1 - 1e-4], report.renyi[1 + 1e-4]
    assert below > report.von_neumann > above
    assert below - above < 1e-3


def test_ghz_half_cut_entropy_is_one_bit():
    ghz = np.zeros(64)
    ghz[[0, 63]] = 1 / np.sqrt(2)
    assert entanglement_entropy(ghz, (3, 3)) == pytest.approx(1.0)
    assert column_entropies(ghz[:, None], (8, 8))[0] == pytest.approx(1.0)


def test_root_entropies_converge_with_bond():
    x = thermal_purification(ThermalSpec(ModelSpec('ising', 8, h=1.0), 0.1, 2))
    full = column_entropies(x.data, (16, 16))
    errors = []
    for bond in (2, 4, 8, 16):
        from_root = np.array([s for _, s in root_column_entropies(compress_to_root(x, bond))])
        errors.append(float(np.max(np.abs(from_root - full))))
    assert errors[-1] < 1e-10
    assert errors[2] < errors[0]
    assert errors[2] < 0.05


def test_thermal_root_shape():
    x = thermal_purification(ThermalSpec(ModelSpec('ising', 8, h=1.0), 0.1, 2))
    tto = compress_to_root(x, max_bond=4)
    assert tto.root_tensor().shape == (4, 4, x.kraus_dim)


def test_bipartition_validation():
    x = random_factor(4, 1, seed=14)
    with pytest.raises(InvalidInputError):
        compress_to_root(x, 2, bipartition=(1, 2))
    with pytest.raises(InvalidInputError):
        compress_to_root(x, 0)
    assert half_bipartition(7) == (3, 4)


def test_entanglement_entropy_of_simple_states():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert entanglement_entropy(bell, (1, 1)) == pytest.approx(1.0)
    assert entanglement_entropy(np.array([1, 0, 0, 0]), (1, 1)) == pytest.approx(0.0)
    with pytest.raises(InvalidInputError):
        entanglement_entropy(np.array([1, 1, 0, 0]), (1, 1))


def test_column_entropies_handle_zero_and_unnormalized_columns():
    columns = np.zeros((4, 3), dtype=complex)
    columns[[0, 3], 1] = 3.0
    columns[0, 2] = 0.5
    np.testing.assert_allclose(column_entropies(columns, (2, 2)), [0.0, 1.0, 0.0], atol=1e-12)


def test_spectrum_entropies():
    report = spectrum_entropies([0.25] * 4, alphas=[0, 2, np.inf, 1])
    assert report.von_neumann == pytest.approx(2.0)
    assert report.purity == pytest.approx(0.25)
    assert report.renyi[2] == pytest.approx(2.0)
    assert report.renyi[np.inf] == pytest.approx(2.0)
    assert report.renyi[0] == pytest.approx(2.0)
    assert 1 not in report.renyi

    with pytest.raises(InvalidInputError):
        spectrum_entropies([0.5, 0.6])


def test_density_entropy_of_even_mixture():
    assert density_entropy(ghz_mixture(4, 0.5)) == pytest.approx(1.0)
    assert density_entropy(ghz_mixture(4, 1.0)) == pytest.approx(0.0, abs=1e-12)
