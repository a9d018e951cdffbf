"""
TTO / EoF toolkit - command line interface.

Runs thermal EoF sweeps, benchmark families, K0 and M scans, scaling
collapses and timing runs, writing CSV or JSON results.
"""

import logging
import sys
from typing import Any, Dict, List, Optional

import click
import numpy as np

from config import DEFAULT_LOG_LEVEL, Settings, configure_logging, read_config_file
from errors import EXIT_OK, EXIT_USAGE, EofError, UsageError
from experiments import (
    bench, scaling_experiment, scan_k0_experiment, scan_m_experiment, thermal_eof, timing,
)
from jobs import resolve_workers
from models import EofOptions, ModelSpec, RunConfig
from oracles import FAMILIES
from results import OUTPUT_FORMATS, read_records, write_records, write_table

logger = logging.getLogger(__name__)

SCALING_FIELDS = ['model', 'sizes', 'c', 'z', 'z_err', 'collapse_residual', 'residual_at_zero']


class GridParam(click.ParamType):
    """A value list given as 'a:b:step', 'a:b' (step 1) or 'v1,v2,...'."""

    name = 'grid'

    def __init__(self, cast=float):
        self.cast = cast

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        text = str(value).strip()
        if not text:
            self.fail('empty value list', param, ctx)
        try:
            if ':' in text:
                parts = [float(p) for p in text.split(':')]
                if len(parts) not in (2, 3):
                    raise ValueError(text)
                start, stop = parts[0], parts[1]
                step = parts[2] if len(parts) == 3 else 1.0
                if step <= 0 or stop < start:
                    raise ValueError(text)
                count = int(np.floor((stop - start) / step + 1e-9)) + 1
                values = [round(start + i * step, 12) for i in range(count)]
            else:
                values = [float(p) for p in text.split(',')]
        except ValueError:
            self.fail(f'{text!r} is not a range a:b[:step] or a comma list', param, ctx)
        if self.cast is int:
            if any(v != int(v) for v in values):
                self.fail(f'{text!r} must contain integers only', param, ctx)
            return [int(v) for v in values]
        return values


class ZRange(click.ParamType):
    name = 'lo:hi'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            lo, hi = (float(p) for p in str(value).split(':'))
        except ValueError:
            self.fail(f'{value!r} is not an interval lo:hi', param, ctx)
        if not lo < hi:
            self.fail(f'empty interval {value!r}', param, ctx)
        return lo, hi


FLOAT_GRID = GridParam(float)
INT_GRID = GridParam(int)


def _apply(func, options):
    for option in reversed(options):
        func = option(func)
    return func


def output_options(func):
    """Output path, format and the timing switch."""
    return _apply(func, [
        click.option('--output', '-o', 'output_path', default=None, help='Result file, stdout if omitted'),
        click.option('--format', 'fmt', type=click.Choice(OUTPUT_FORMATS), default='csv', show_default=True),
        click.option('--no-timing', is_flag=True, help='Leave wall_time_seconds empty for byte-identical reruns'),
    ])


def optimizer_options(func):
    """Knobs of the convex-roof search."""
    return _apply(func, [
        click.option('--seed', type=int, default=0, show_default=True),
        click.option('--restarts', type=int, default=3, show_default=True),
        click.option('--max-evals', type=int, default=None, help='Per restart; 200 K^2 if omitted'),
        click.option('--ftol', type=float, default=1e-8, show_default=True),
        click.option('--K', 'k_total', type=int, default=None, help='Decomposition size K >= K0'),
        click.option('--k-extra', type=int, default=0, show_default=True, help='K = K0 + k_extra'),
        click.option('--random-rows', is_flag=True, help='Seeded choice of the K0 mixer rows'),
    ])


def model_options(func):
    return _apply(func, [
        click.option('--model', type=click.Choice(['ising', 'xxz']), required=True),
        click.option('--h', 'field', type=float, default=None, help='Ising transverse field'),
        click.option('--xi', type=float, default=None, help='XXZ anisotropy'),
        click.option('--J', 'coupling', type=float, default=1.0, show_default=True),
    ])


def build_options(params: Dict[str, Any], kraus_dim: Optional[int] = None) -> EofOptions:
    k_extra = params['k_extra']
    if params.get('k_total') is not None:
        if kraus_dim is None:
            raise UsageError('--K needs a fixed K0; use --k-extra here')
        k_extra = params['k_total'] - kraus_dim
        if k_extra < 0:
            raise UsageError(f'--K {params["k_total"]} is smaller than K0 = {kraus_dim}')
    return EofOptions(
        max_evals=params['max_evals'],
        restarts=params['restarts'],
        seed=params['seed'],
        ftol=params['ftol'],
        xtol=params['ftol'],
        k_extra=k_extra,
        random_rows=params['random_rows'],
    )


def build_model(params: Dict[str, Any], n_sites: int) -> ModelSpec:
    kind = params['model']
    if kind == 'ising' and params['field'] is None:
        raise UsageError('--model ising needs --h')
    if kind == 'xxz' and params['xi'] is None:
        raise UsageError('--model xxz needs --xi')
    return ModelSpec(
        kind, n_sites,
        h=params['field'] if kind == 'ising' else None,
        xi=params['xi'] if kind == 'xxz' else None,
        coupling=params['coupling'],
    )


def run_config(ctx: click.Context) -> RunConfig:
    params = dict(ctx.params)
    config = RunConfig(
        command=ctx.info_name or '',
        parameters=params,
        seed=params.get('seed'),
        output_path=params.get('output_path'),
        format=params.get('fmt', 'csv'),
        parallel_workers=ctx.obj['workers'],
    )
    logger.debug(f'Resolved {config}')
    return config


def emit(config: RunConfig, output) -> None:
    """Write records with every resolved run value echoed into their parameters."""
    resolved = {**config.parameters, 'workers': config.parallel_workers}
    for record in output.records:
        record.parameters = {**resolved, **record.parameters}
    provenance = {**output.provenance, 'run': config.parameters}
    write_records(output.records, config.output_path, config.format, output.summary, provenance)


def _config_defaults(command: click.Command, path: str) -> Dict[str, str]:
    """Config-file values keyed by parameter name; flags and names both accepted."""
    aliases = {}
    for param in command.params:
        aliases[param.name] = param.name
        for opt in param.opts:
            aliases[opt.lstrip('-').lower().replace('-', '_')] = param.name
    values = read_config_file(path, aliases.keys())
    return {aliases[key]: value for key, value in values.items()}


@click.group()
@click.option('--log-level', default=None, help=f'debug, info, warning or error (default {DEFAULT_LOG_LEVEL})')
@click.option('--config', 'config_path', default=None, type=click.Path(), help='Flat key=value defaults file')
@click.option('--workers', type=int, default=None, help='Parallel jobs; THREADS env if omitted')
@click.pass_context
def cli(ctx, log_level, config_path, workers):
    """Entanglement of formation of many-body states through tree tensor operators."""
    settings = Settings.from_env()
    configure_logging(log_level or settings.log_level)
    ctx.ensure_object(dict)
    ctx.obj['workers'] = resolve_workers(workers, settings.workers)

    path = config_path or settings.config_path
    command = cli.commands.get(ctx.invoked_subcommand or '')
    if path and command is not None:
        ctx.default_map = {ctx.invoked_subcommand: _config_defaults(command, path)}
        logger.info(f'Defaults for {ctx.invoked_subcommand} read from {path}')


@cli.command('thermal-eof')
@model_options
@click.option('--N', 'sizes', type=INT_GRID, required=True, help='Chain lengths')
@click.option('--T', 'temperatures', type=FLOAT_GRID, required=True, help='Temperature grid')
@click.option('--T-in-gap', 'gap_units', is_flag=True, help='Read --T in units of the gap of each N')
@click.option('--K0', 'kraus_dim', type=int, default=2, show_default=True)
@click.option('--M', 'max_bond', type=int, default=None, help='TTO bond dimension; full X if omitted')
@optimizer_options
@output_options
@click.pass_context
def thermal_eof_command(ctx, **params):
    """E_F of truncated Gibbs states over a (N, T) grid."""
    config = run_config(ctx)
    models = [build_model(params, n) for n in params['sizes']]
    output = thermal_eof(models, params['temperatures'], params['kraus_dim'], params['max_bond'],
                         build_options(params, params['kraus_dim']), config.parallel_workers,
                         params['gap_units'], not params['no_timing'])
    emit(config, output)


@cli.command('bench')
@click.option('--family', type=click.Choice(FAMILIES), required=True)
@click.option('--lambda', 'lam', type=FLOAT_GRID, default=None, help='Mixing weight (bell, ghz)')
@click.option('--N', 'sizes', type=INT_GRID, default=None, help='Qubits (ghz, random-pure, separable)')
@click.option('--K0', 'kraus_dims', type=INT_GRID, default=None, help='Ensemble size (random-pure)')
@click.option('--dim', type=int, default=None, help='Hilbert dimension (hs-random)')
@click.option('--d', 'local_dim', type=int, default=None, help='Local dimension (werner, isotropic)')
@click.option('--f', 'f_values', type=FLOAT_GRID, default=None, help='Werner/isotropic parameter')
@click.option('--instances', type=int, default=1, show_default=True)
@optimizer_options
@output_options
@click.pass_context
def bench_command(ctx, **params):
    """Benchmark the optimizer on states with known EoF."""
    config = run_config(ctx)
    grid = {
        'lambda': params['lam'],
        'N': params['sizes'],
        'K0': params['kraus_dims'],
        'dim': [params['dim']] if params['dim'] is not None else None,
        'd': [params['local_dim']] if params['local_dim'] is not None else None,
        'f': params['f_values'],
    }
    output = bench(params['family'], grid, params['instances'], params['seed'],
                   build_options(params), config.parallel_workers, not params['no_timing'])
    emit(config, output)


@cli.command('scan-k0')
@model_options
@click.option('--N', 'n_sites', type=int, required=True)
@click.option('--T', 'temperature', type=float, required=True)
@click.option('--K0-max', 'k0_max', type=int, default=6, show_default=True)
@click.option('--M', 'max_bond', type=int, default=None)
@click.option('--with-k-plus-2', is_flag=True, help='Also report K = K0 + 2')
@optimizer_options
@output_options
@click.pass_context
def scan_k0_command(ctx, **params):
    """E_F against the number K0 of retained eigenstates."""
    config = run_config(ctx)
    if params['k_total'] is not None:
        raise UsageError('scan-k0 sets K = K0; use --k-extra')
    output = scan_k0_experiment(build_model(params, params['n_sites']), params['temperature'],
                                params['k0_max'], params['max_bond'], build_options(params),
                                params['with_k_plus_2'])
    emit(config, output)


@cli.command('scan-m')
@model_options
@click.option('--N', 'n_sites', type=int, required=True)
@click.option('--T', 'temperature', type=float, required=True)
@click.option('--K0', 'kraus_dim', type=int, default=2, show_default=True)
@click.option('--M', 'bond_dims', type=INT_GRID, required=True, help='Bond dimensions, the largest d^(N/2)')
@click.option('--compare-full', is_flag=True, help='Also optimize on the uncompressed X')
@optimizer_options
@output_options
@click.pass_context
def scan_m_command(ctx, **params):
    """E_F against the TTO bond dimension M."""
    config = run_config(ctx)
    output = scan_m_experiment(build_model(params, params['n_sites']), params['temperature'],
                               params['kraus_dim'], params['bond_dims'],
                               build_options(params, params['kraus_dim']), params['compare_full'])
    emit(config, output)


@cli.command('scaling')
@click.option('--input', 'input_path', type=click.Path(), required=True, help='thermal-eof CSV')
@click.option('--c', 'charge', type=float, default=None, help='1/2 for Ising, 1 for XXZ if omitted')
@click.option('--z-range', type=ZRange(), default='0.5:1.5', show_default=True)
@click.option('--fit-c', is_flag=True, help='Fit c jointly with z')
@click.option('--max-gap-fraction', type=float, default=None, help='Keep T <= fraction * gap(N)')
@click.option('--plateau', is_flag=True, help='Report E_F(0.1 gap) / E_F(T -> 0) per N')
@click.option('--output', '-o', 'output_path', default=None)
@click.option('--format', 'fmt', type=click.Choice(OUTPUT_FORMATS), default='csv', show_default=True)
@click.pass_context
def scaling_command(ctx, **params):
    """Fit the dynamical exponent z from a finite-size collapse."""
    config = run_config(ctx)
    records = read_records(params['input_path'])
    rows, summary = scaling_experiment(records, params['charge'], params['z_range'], params['fit_c'],
                                       params['max_gap_fraction'], params['plateau'])
    if config.format == 'csv':
        summary = {key: value for key, value in summary.items() if key != 'g_table'}
    write_table(rows, SCALING_FIELDS, config.output_path, config.format, summary,
                {'command': 'scaling', 'run': config.parameters})


@cli.command('timing')
@click.option('--mode', type=click.Choice(['full-x', 'tto-root']), required=True)
@click.option('--model', type=click.Choice(['ising', 'xxz']), default='ising', show_default=True)
@click.option('--h', 'field', type=float, default=1.0, show_default=True)
@click.option('--xi', type=float, default=None)
@click.option('--J', 'coupling', type=float, default=1.0, show_default=True)
@click.option('--N', 'sizes', type=INT_GRID, default='6:12', show_default=True,
              help='Chain lengths (full-x); the last one is used by tto-root')
@click.option('--M', 'bond_dims', type=INT_GRID, default='8,16,32,64', show_default=True)
@click.option('--T', 'temperature', type=float, default=0.1, show_default=True)
@click.option('--K0', 'kraus_dim', type=int, default=2, show_default=True)
@click.option('--max-evals', type=int, default=200, show_default=True, help='Fixed budget per run')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--output', '-o', 'output_path', default=None)
@click.option('--format', 'fmt', type=click.Choice(OUTPUT_FORMATS), default='csv', show_default=True)
@click.pass_context
def timing_command(ctx, **params):
    """Wall time of fixed-budget optimizations and the fitted scaling exponent."""
    config = run_config(ctx)
    if params['model'] == 'xxz':
        params['field'] = None
    options = EofOptions(max_evals=params['max_evals'], restarts=1, seed=params['seed'], ftol=0.0, xtol=0.0)
    sizes: List[int] = params['sizes']
    model = build_model(params, sizes[-1])
    output = timing(params['mode'], model, params['temperature'], params['kraus_dim'],
                    sizes, params['bond_dims'], options)
    emit(config, output)


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line and map failures to exit codes (64 usage, 65 data, 2 capacity)."""
    try:
        result = cli.main(args=argv, prog_name='tto-eof', standalone_mode=False)
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except EofError as exc:
        logger.error(f'{type(exc).__name__}: {exc}')
        return exc.exit_code
    return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
