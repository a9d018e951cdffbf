"""
Experiment drivers behind the command line.

Every driver turns resolved settings into ResultRecords plus a summary;
independent grid points and instances are dispatched through jobs.run_jobs.
"""

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import ARTIFACT_VERSION
from eof import minimize_eof, scan_k0, scan_m
from errors import DegenerateFitError, InvalidInputError
from jobs import run_jobs
from models import EofOptions, ModelSpec, ResultRecord, ThermalSpec
from oracles import PROVENANCE, make_instance, separable_fraction
from scaling import ScalingDataset, collapse_fit, plateau_check
from spin_models import model_spectrum, thermal_purification
from tto import compress_to_root, half_bipartition

logger = logging.getLogger(__name__)

# Prefactor of the log N term in the scaling law
CENTRAL_CHARGE = {'ising': 0.5, 'xxz': 1.0}
PLATEAU_TOL = 0.01
EXACT_TOL = 1e-6


@dataclass
class ExperimentOutput:
    """Records of one command plus run-level summary and provenance."""

    records: List[ResultRecord]
    summary: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ThermalJob:
    model: ModelSpec
    temperature: float
    kraus_dim: int
    max_bond: Optional[int]
    options: EofOptions
    gap_units: bool = False
    timed: bool = True


@dataclass
class BenchJob:
    family: str
    parameters: Dict[str, Any]
    seed: int
    index: int
    options: EofOptions
    timed: bool = True


def model_parameters(model: ModelSpec) -> Dict[str, Any]:
    name = 'h' if model.kind == 'ising' else 'xi'
    return {'model': model.kind, 'N': model.n_sites, name: model.parameter, 'J': model.coupling}


def option_parameters(options: EofOptions, k: int) -> Dict[str, Any]:
    return {
        'restarts': options.restarts,
        'max_evals': options.budget(k),
        'ftol': options.ftol,
        'k_extra': options.k_extra,
        'random_rows': options.random_rows,
    }


def _provenance(**extra: Any) -> Dict[str, Any]:
    return {'artifact_version': ARTIFACT_VERSION, **extra}


def _timed_minimize(factor, shape, kraus_dim, options, timed=True, size=None):
    start = time.perf_counter()
    result = minimize_eof(factor, shape, kraus_dim, size=size, options=options)
    elapsed = time.perf_counter() - start
    return result, (elapsed if timed else None)


def run_thermal_job(job: ThermalJob) -> ResultRecord:
    """E_F of one (N, T) thermal state, on the TTO root when a bond is given."""
    gap = model_spectrum(job.model, 2).gap
    temperature = job.temperature * gap if job.gap_units else job.temperature
    x = thermal_purification(ThermalSpec(job.model, temperature, job.kraus_dim))

    discarded = 0.0
    if job.max_bond is not None:
        tto = compress_to_root(x, job.max_bond)
        factor, shape, discarded = tto.root, tto.bond_dims, tto.discarded_weight
    else:
        n_a, n_b = half_bipartition(x.n_sites)
        factor, shape = x.data, (x.local_dim ** n_a, x.local_dim ** n_b)

    result, wall_time = _timed_minimize(factor, shape, x.kraus_dim, job.options, job.timed)
    parameters = {
        **model_parameters(job.model),
        'T': temperature,
        'T_over_gap': temperature / gap if gap else None,
        'gap': gap,
        'K0_requested': job.kraus_dim,
        'discarded_weight': discarded,
        **option_parameters(job.options, result.K),
    }
    logger.info(f'{job.model.tag()} N={job.model.n_sites} T={temperature:.6g}: E_F={result.value:.8f} bits')
    return ResultRecord(
        command='thermal-eof', parameters=parameters, E_F=result.value, K0=result.K0, K=result.K,
        M=job.max_bond, evaluations=result.evaluations, wall_time_seconds=wall_time,
        converged=result.converged, seed=job.options.seed)


def thermal_eof(models: Sequence[ModelSpec], temperatures: Sequence[float], kraus_dim: int,
                max_bond: Optional[int] = None, options: Optional[EofOptions] = None,
                workers: int = 1, gap_units: bool = False, timed: bool = True) -> ExperimentOutput:
    """One record per (N, T) grid point."""
    if not temperatures:
        raise InvalidInputError('Temperature grid is empty')
    options = options or EofOptions()
    jobs = [ThermalJob(model, float(t), kraus_dim, max_bond, options, gap_units, timed)
            for model in models for t in temperatures]
    records = run_jobs(run_thermal_job, jobs, workers)
    summary = {
        'points': len(records),
        'converged': sum(1 for r in records if r.converged),
    }
    return ExperimentOutput(records, summary, _provenance(command='thermal-eof'))


def bench_ensemble_size(kraus_dim: int, root_shape: Tuple[int, int], options: EofOptions) -> int:
    """
    K for a benchmark state on a d_A x d_B root.

    Once the rank exceeds min(d_A, d_B) a separable decomposition can need
    more product states than the rank (the symmetric projector on two qubits
    needs four), so K is raised to d_A d_B there. Rank up to min(d_A, d_B)
    and full rank keep K = K0 + k_extra.
    """
    k = kraus_dim + options.k_extra
    d_a, d_b = root_shape
    if min(d_a, d_b) < kraus_dim < d_a * d_b:
        k = max(k, d_a * d_b)
    return k


def run_bench_job(job: BenchJob) -> ResultRecord:
    """Generate one benchmark instance and bound its EoF."""
    rng = np.random.default_rng([job.seed, job.index])
    instance = make_instance(job.family, job.parameters, rng)
    factor = instance.factor
    size = bench_ensemble_size(factor.kraus_dim, instance.root_shape, job.options)
    result, wall_time = _timed_minimize(factor.data, instance.root_shape, factor.kraus_dim,
                                        job.options, job.timed, size)
    parameters = {
        'family': job.family,
        'instance': job.index,
        **instance.parameters,
        **option_parameters(job.options, result.K),
    }
    return ResultRecord(
        command='bench', parameters=parameters, E_F=result.value, exact_eof=instance.exact_eof,
        K0=result.K0, K=result.K, evaluations=result.evaluations, wall_time_seconds=wall_time,
        converged=result.converged, seed=job.seed)


def parameter_grid(grid: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    """Cartesian product of the given value lists, keys in sorted order."""
    keys = sorted(key for key, values in grid.items() if values is not None)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[key] for key in keys))]


def bench_summary(family: str, records: Sequence[ResultRecord]) -> Dict[str, Any]:
    summary: Dict[str, Any] = {'instances': len(records), 'family': family}
    errors = [r.abs_error for r in records if r.abs_error is not None]
    if errors:
        summary['max_abs_error'] = float(np.max(errors))
        summary['median_abs_error'] = float(np.median(errors))
        summary['fraction_below_1e-6'] = float(np.mean(np.asarray(errors) < EXACT_TOL))
        summary['separable_fraction'] = separable_fraction(
            [r.exact_eof for r in records if r.exact_eof is not None])
    if family == 'random-pure':
        density = [r.E_F / (int(r.parameters['N']) // 2) for r in records]
        summary['entanglement_density'] = float(np.mean(density))
    summary['max_E_F'] = float(max(r.E_F for r in records)) if records else 0.0
    return summary


def bench(family: str, grid: Dict[str, Sequence[Any]], instances: int = 1, seed: int = 0,
          options: Optional[EofOptions] = None, workers: int = 1, timed: bool = True) -> ExperimentOutput:
    """Run a benchmark family over a parameter grid, instances per grid point."""
    if instances < 1:
        raise InvalidInputError(f'instances must be >= 1, got {instances}')
    options = options or EofOptions(seed=seed)
    points = parameter_grid(grid)
    jobs = [BenchJob(family, point, seed, index, options, timed)
            for index, (point, _) in enumerate(itertools.product(points, range(instances)))]
    records = run_jobs(run_bench_job, jobs, workers)
    summary = bench_summary(family, records)
    return ExperimentOutput(records, summary, _provenance(command='bench', oracle={family: PROVENANCE.get(family)}))


def plateau_flags(values: Sequence[float], tol: float = PLATEAU_TOL) -> List[bool]:
    """
    True at K0 when every later E_F stays within tol of E_F(K0), relative.

    The last point has no successor and inherits the flag of the one before.
    """
    flags: List[bool] = []
    for i, value in enumerate(values[:-1]):
        scale = max(abs(value), 1e-300)
        flags.append(all(abs(later - value) / scale < tol for later in values[i + 1:]))
    if values:
        flags.append(flags[-1] if flags else False)
    return flags


def scan_k0_experiment(model: ModelSpec, temperature: float, k0_max: int, max_bond: Optional[int] = None,
                       options: Optional[EofOptions] = None, with_k_plus_2: bool = False) -> ExperimentOutput:
    """E_F and S(rho) against K0, with a plateau flag looking ahead to larger K0."""
    options = options or EofOptions()
    points = scan_k0(model, temperature, k0_max, options, max_bond=max_bond, with_k_plus_2=with_k_plus_2)
    values = [point.value for point in points]
    flags = plateau_flags(values)
    records = []
    for i, point in enumerate(points):
        change = None
        if i + 1 < len(points):
            change = abs(values[i + 1] - point.value) / max(abs(point.value), 1e-300)
        parameters = {
            **model_parameters(model),
            'T': temperature,
            'K0_requested': point.k0,
            'density_entropy': point.density_entropy,
            'E_F_K0_plus_2': point.value_k_plus_2,
            'relative_change': change,
            'plateau': flags[i],
            **option_parameters(options, point.k),
        }
        records.append(ResultRecord(
            command='scan-k0', parameters=parameters, E_F=point.value, K0=point.k0_effective,
            K=point.k, M=max_bond, evaluations=point.evaluations, converged=point.converged,
            seed=options.seed))
    plateau_k0 = next((point.k0 for point, flag in zip(points, flags) if flag), None)
    summary = {'plateau_K0': plateau_k0, 'points': len(records)}
    return ExperimentOutput(records, summary, _provenance(command='scan-k0'))


def scan_m_experiment(model: ModelSpec, temperature: float, kraus_dim: int, bond_dims: Sequence[int],
                      options: Optional[EofOptions] = None, compare_full: bool = False) -> ExperimentOutput:
    """E_F against bond dimension; the summary names the smallest converged M."""
    options = options or EofOptions()
    spec = ThermalSpec(model, temperature, kraus_dim)
    scan = scan_m(spec, bond_dims, options)
    records = []
    for point in scan.points:
        relative = abs(point.value - scan.reference) / max(abs(scan.reference), 1e-300)
        parameters = {
            **model_parameters(model),
            'T': temperature,
            'K0_requested': kraus_dim,
            'relative_deviation': relative,
            **option_parameters(options, point.k),
        }
        records.append(ResultRecord(
            command='scan-m', parameters=parameters, E_F=point.value, K0=point.k0, K=point.k,
            M=point.max_bond, evaluations=point.evaluations, converged=point.converged,
            seed=options.seed))

    summary: Dict[str, Any] = {'M_star': scan.converged_bond, 'reference_E_F': scan.reference}
    if compare_full:
        x = thermal_purification(spec)
        n_a, n_b = half_bipartition(x.n_sites)
        full = minimize_eof(x.data, (2 ** n_a, 2 ** n_b), x.kraus_dim, options=options)
        summary['full_x_E_F'] = full.value
        summary['full_x_difference'] = abs(full.value - scan.reference)
    return ExperimentOutput(records, summary, _provenance(command='scan-m'))


def dataset_from_records(records: Sequence[Dict[str, Any]],
                         max_gap_fraction: Optional[float] = None) -> Tuple[ScalingDataset, Dict[int, float]]:
    """Collect (N, T, E_F) and the gap of every N from thermal-eof output."""
    rows = [r for r in records if r.get('command') == 'thermal-eof']
    if not rows:
        raise InvalidInputError('No thermal-eof records in the input')
    kinds = {r['parameters'].get('model') for r in rows}
    if len(kinds) != 1:
        raise InvalidInputError(f'Input mixes models {sorted(map(str, kinds))}')

    points = []
    gaps: Dict[int, float] = {}
    try:
        for r in rows:
            params = r['parameters']
            n, t, gap = int(params['N']), float(params['T']), float(params['gap'])
            gaps[n] = gap
            if max_gap_fraction is not None and t > max_gap_fraction * gap * (1 + 1e-9):
                continue
            points.append((n, t, float(r['E_F'])))
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f'Malformed thermal-eof parameters: {exc}')

    kind = kinds.pop()
    return ScalingDataset(points, model_tag=str(kind)), gaps


def scaling_experiment(records: Sequence[Dict[str, Any]], c: Optional[float] = None,
                       z_range: Sequence[float] = (0.5, 1.5), fit_c: bool = False,
                       max_gap_fraction: Optional[float] = None,
                       plateau: bool = False) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    """Collapse fit of a thermal-eof table; returns the fit row and a summary."""
    data, gaps = dataset_from_records(records, max_gap_fraction)
    if len(data.sizes) < 2:
        raise DegenerateFitError(f'Collapse needs at least two chain lengths, got {data.sizes}')
    if c is None:
        c = CENTRAL_CHARGE.get(data.model_tag)
        if c is None:
            raise InvalidInputError(f'No default c for model {data.model_tag!r}; pass --c')

    fit = collapse_fit(data, c, z_range, fit_c=fit_c)
    row = {
        'model': data.model_tag,
        'sizes': ';'.join(str(n) for n in data.sizes),
        'c': fit.c,
        'z': fit.z,
        'z_err': fit.z_err,
        'collapse_residual': fit.collapse_residual,
        'residual_at_zero': fit.residual_at_zero,
    }
    summary: Dict[str, Any] = {'g_table': fit.g_table}
    if plateau:
        for entry in plateau_check(data, gaps):
            summary[f'plateau_ratio_N{entry.n_sites}'] = entry.ratio
            summary[f'plateau_flagged_N{entry.n_sites}'] = entry.flagged
    return [row], summary


def fitted_exponent(x: Sequence[float], wall_times: Sequence[float]) -> float:
    """Slope of log2(time) against x."""
    if len(x) < 2:
        raise DegenerateFitError('An exponent fit needs at least two sizes')
    slope, _ = np.polyfit(np.asarray(x, dtype=float), np.log2(np.asarray(wall_times)), 1)
    return float(slope)


def timing(mode: str, model: ModelSpec, temperature: float, kraus_dim: int,
           sizes: Sequence[int] = (), bond_dims: Sequence[int] = (),
           options: Optional[EofOptions] = None) -> ExperimentOutput:
    """
    Wall time of a fixed-budget optimization.

    full-x runs on the whole purification for every N in sizes and fits
    the exponent in the Hilbert dimension 2^N; tto-root compresses the
    state of model.n_sites to every M in bond_dims and fits the power of M.
    """
    options = options or EofOptions(max_evals=200, restarts=1, ftol=0.0, xtol=0.0)
    records = []
    xs, times = [], []
    if mode == 'full-x':
        if not sizes:
            raise InvalidInputError('full-x timing needs a list of N')
        for n in sizes:
            x = thermal_purification(ThermalSpec(model.resized(n), temperature, kraus_dim))
            n_a, n_b = half_bipartition(n)
            result, wall_time = _timed_minimize(x.data, (2 ** n_a, 2 ** n_b), x.kraus_dim, options)
            xs.append(float(n))
            times.append(wall_time)
            records.append(ResultRecord(
                command='timing', parameters={**model_parameters(model.resized(n)), 'mode': mode,
                                              'T': temperature, **option_parameters(options, result.K)},
                E_F=result.value, K0=result.K0, K=result.K, evaluations=result.evaluations,
                wall_time_seconds=wall_time, converged=result.converged, seed=options.seed))
        exponent_kind = 'log2_time_per_log2_dim'
    elif mode == 'tto-root':
        if not bond_dims:
            raise InvalidInputError('tto-root timing needs a list of M')
        x = thermal_purification(ThermalSpec(model, temperature, kraus_dim))
        for m in bond_dims:
            tto = compress_to_root(x, m)
            result, wall_time = _timed_minimize(tto.root, tto.bond_dims, x.kraus_dim, options)
            xs.append(float(np.log2(tto.bond_dims[0])))
            times.append(wall_time)
            records.append(ResultRecord(
                command='timing', parameters={**model_parameters(model), 'mode': mode, 'T': temperature,
                                              'bond': tto.bond_dims[0], **option_parameters(options, result.K)},
                E_F=result.value, K0=result.K0, K=result.K, M=m, evaluations=result.evaluations,
                wall_time_seconds=wall_time, converged=result.converged, seed=options.seed))
        exponent_kind = 'log2_time_per_log2_M'
    else:
        raise InvalidInputError(f'Unknown timing mode {mode!r}')

    summary = {'mode': mode, 'exponent': fitted_exponent(xs, times), 'exponent_kind': exponent_kind}
    logger.info(f'Timing {mode}: exponent {summary["exponent"]:.3f} ({exponent_kind})')
    return ExperimentOutput(records, summary, _provenance(command='timing'))
