"""
Full-size acceptance runs. Minutes to hours; enabled with RUN_SLOW=1.
"""

import os

import numpy as np
import pytest

from eof import minimize_eof
from experiments import bench, scaling_experiment, scan_k0_experiment, scan_m_experiment, thermal_eof, timing
from models import EofOptions, ModelSpec, ThermalSpec
from oracles import binary_entropy
from spin_models import model_spectrum, thermal_purification
from tto import compress_to_root

pytestmark = pytest.mark.skipif(os.getenv('RUN_SLOW') != '1', reason='set RUN_SLOW=1 for acceptance runs')

TIGHT = EofOptions(max_evals=20000, restarts=5, ftol=1e-14, xtol=1e-12)
WORKERS = int(os.getenv('THREADS', '1'))


def test_hilbert_schmidt_states_match_concurrence():
    output = bench('hs-random', {'dim': [4]}, instances=500, seed=3, options=TIGHT, workers=WORKERS)
    errors = np.array([r.abs_error for r in output.records])
    assert errors.max() < 1e-3
    assert np.mean(errors < 1e-6) >= 0.95
    assert output.summary['separable_fraction'] == pytest.approx(0.25, abs=0.04)


@pytest.mark.parametrize('k0', [2, 3, 4])
def test_random_pure_ensembles_two_qubits(k0):
    output = bench('random-pure', {'N': [2], 'K0': [k0]}, instances=200, seed=k0, options=TIGHT,
                   workers=WORKERS)
    assert output.summary['max_abs_error'] < 1e-3
    assert all(r.K == (4 if k0 == 3 else k0) for r in output.records)


def test_bell_and_ghz_mixtures():
    grid = [round(0.1 * i, 12) for i in range(11)]
    output = bench('bell', {'lambda': grid}, options=TIGHT, workers=WORKERS)
    for record in output.records:
        lam = record.parameters['lambda']
        c = abs(2 * lam - 1)
        expected = binary_entropy(0.5 * (1 + np.sqrt(1 - c * c)))
        assert record.E_F == pytest.approx(expected, abs=1e-6)

    bell = {r.parameters['lambda']: r.E_F for r in output.records}
    ghz = bench('ghz', {'lambda': [0.2, 0.7, 0.9], 'N': [4, 6]}, options=TIGHT, workers=WORKERS)
    for record in ghz.records:
        assert record.E_F == pytest.approx(bell[record.parameters['lambda']], abs=1e-5)


@pytest.mark.parametrize('family, f_grid, separable', [
    ('werner', [-1.0, -0.75, -0.5, -0.25, 0.0, 0.5, 1.0], lambda f: f >= 0),
    ('isotropic', [0.0, 0.25, 0.5, 0.7, 0.9, 1.0], lambda f: f <= 0.5),
])
def test_two_qubit_symmetric_families(family, f_grid, separable):
    output = bench(family, {'d': [2], 'f': f_grid}, options=TIGHT, workers=WORKERS)
    for record in output.records:
        assert record.abs_error <= 1e-4
        if record.K0 == 3:
            assert record.K == 4
        if separable(record.parameters['f']):
            assert record.E_F <= 1e-4


@pytest.mark.parametrize('family, f_grid, k_extra', [
    ('werner', [0.0, 0.5, 1.0], 3),
    ('isotropic', [0.0, 0.2, 1 / 3], 1),
])
def test_qutrit_separable_regions(family, f_grid, k_extra):
    options = EofOptions(max_evals=20000, restarts=5, ftol=1e-14, xtol=1e-12, k_extra=k_extra)
    output = bench(family, {'d': [3], 'f': f_grid}, options=options, workers=WORKERS)
    assert all(r.E_F <= 1e-3 for r in output.records)


def test_separable_states():
    pairs = bench('separable', {'N': [2]}, instances=100, seed=5, options=TIGHT, workers=WORKERS)
    assert all(r.E_F < 1e-6 for r in pairs.records)
    quads = bench('separable', {'N': [4]}, instances=10, seed=6, options=TIGHT, workers=WORKERS)
    assert all(r.E_F < 1e-2 for r in quads.records)


def test_thermal_k0_convergence():
    model = ModelSpec('ising', 12, h=1.0)
    output = scan_k0_experiment(model, 0.1, 6, options=TIGHT)
    values = {r.parameters['K0_requested']: r.E_F for r in output.records}
    assert abs(values[2] - values[6]) <= 0.01 * values[6]


def test_root_and_full_purification_agree():
    spec = ThermalSpec(ModelSpec('ising', 8, h=1.0), 0.1, 2)
    x = thermal_purification(spec)
    tto = compress_to_root(x, 16)
    full = minimize_eof(x.data, (16, 16), options=TIGHT).value
    root = minimize_eof(tto.root, tto.bond_dims, options=TIGHT).value
    assert abs(full - root) <= 2e-4


@pytest.mark.parametrize('kind, parameter, temperature', [('ising', 1.0, 0.1), ('xxz', 0.5, 0.5)])
def test_converged_bond_grows_with_n(kind, parameter, temperature):
    stars = []
    for n in (6, 8, 10, 12):
        model = ModelSpec(kind, n, **{'h' if kind == 'ising' else 'xi': parameter})
        bonds = [2 ** k for k in range(1, n // 2 + 1)]
        stars.append(scan_m_experiment(model, temperature, 2, bonds, options=TIGHT).summary['M_star'])
    assert stars == sorted(stars)


@pytest.mark.parametrize('kind, parameter', [('ising', 1.0), ('xxz', 0.5)])
def test_scaling_collapse(kind, parameter):
    models = [ModelSpec(kind, n, **{'h' if kind == 'ising' else 'xi': parameter}) for n in (8, 10, 12)]
    fractions = list(np.linspace(0.02, 0.5, 13))
    output = thermal_eof(models, fractions, 2, options=TIGHT, workers=WORKERS, gap_units=True)
    records = [r.to_dict() for r in output.records]
    rows, summary = scaling_experiment(records, max_gap_fraction=0.5, plateau=False)
    fit = rows[0]
    assert 0.85 <= fit['z'] <= 1.15
    assert fit['collapse_residual'] <= 0.25 * fit['residual_at_zero']

    for model in models:
        gap = model_spectrum(model, 2).gap
        cold = thermal_eof([model], [1e-3 * gap], 2, options=TIGHT).records[0].E_F
        warm = thermal_eof([model], [0.1 * gap], 2, options=TIGHT).records[0].E_F
        assert warm / cold >= 0.9


def test_runtime_exponents():
    model = ModelSpec('ising', 12, h=1.0)
    full = timing('full-x', model, 0.1, 2, sizes=list(range(6, 13, 2)))
    assert full.summary['exponent'] == pytest.approx(1.5, abs=0.2)

    root = timing('tto-root', model, 0.1, 2, bond_dims=[8, 16, 32, 64])
    assert root.summary['exponent'] == pytest.approx(3.0, abs=0.5)
