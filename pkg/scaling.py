"""
Finite-size scaling of the thermal EoF.

Near a critical point E_F(T, N) = (c/3) log2 N + g(T N^z). Curves for
different N collapse once the size term is subtracted and the temperature
is rescaled with the right dynamical exponent z.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from errors import DegenerateFitError, InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_Z_RANGE = (0.5, 1.5)
Z_GRID_POINTS = 201
# A plateau ratio below this is flagged
PLATEAU_THRESHOLD = 0.9
MONOTONE_SLACK = 1e-6

ScalingPoint = Tuple[int, float, float]


@dataclass
class ScalingDataset:
    """(N, T, E_F) triples of one model, E_F in bits."""

    points: List[ScalingPoint]
    model_tag: str = ''

    def __post_init__(self) -> None:
        cleaned = []
        for n, t, e in self.points:
            if int(n) < 2:
                raise InvalidInputError(f'Chain length must be >= 2, got {n}')
            if not t > 0:
                raise InvalidInputError(f'Temperature must be > 0, got {t}')
            cleaned.append((int(n), float(t), float(e)))
        self.points = cleaned

    @property
    def sizes(self) -> List[int]:
        return sorted({n for n, _, _ in self.points})

    def curves(self) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
        """Per-N (T, E_F) arrays sorted by temperature."""
        grouped: Dict[int, List[Tuple[float, float]]] = defaultdict(list)
        for n, t, e in self.points:
            grouped[n].append((t, e))
        result = {}
        for n, pairs in grouped.items():
            pairs.sort()
            result[n] = (np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))
        return result


@dataclass
class ScalingFit:
    """Result of a collapse fit; g_table holds the pooled (T N^z, g) points."""

    c: float
    z: float
    z_err: float
    collapse_residual: float
    g_table: List[Tuple[float, float]] = field(default_factory=list)
    residual_at_zero: Optional[float] = None

    def __repr__(self) -> str:
        return f'<ScalingFit z={self.z:.4f}+-{self.z_err:.4f} c={self.c:.4f} residual={self.collapse_residual:.3e}>'


@dataclass
class PlateauRow:
    """Ratio of E_F at a fraction of the gap to the low-temperature baseline."""

    n_sites: int
    gap: float
    ratio: float
    flagged: bool
    monotone: bool


def rescale(n_sites: int, temperature: float, e_f: float, c: float, z: float = 1.0) -> Tuple[float, float]:
    """(T N^z, E_F - (c/3) log2 N)."""
    if n_sites < 2:
        raise InvalidInputError(f'Chain length must be >= 2, got {n_sites}')
    return temperature * n_sites ** z, e_f - (c / 3.0) * np.log2(n_sites)


def _rescaled_curves(data: ScalingDataset, c: float, z: float) -> List[Tuple[np.ndarray, np.ndarray]]:
    curves = []
    for n, (t, e) in sorted(data.curves().items()):
        x = t * float(n) ** z
        y = e - (c / 3.0) * np.log2(n)
        curves.append((x, y))
    return curves


def monotone_interpolant(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Least-squares monotone fit through scattered (x, y) points.

    Tied x values are averaged and weighted by their count. The fit is run
    non-decreasing and non-increasing and the one with the lower weighted
    squared error is kept; ties go to non-decreasing. Returns the distinct
    x values and the fitted y at each, the nodes of a piecewise-linear curve.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.shape != y_arr.shape or x_arr.size == 0:
        raise InvalidInputError('Monotone fit needs matching, non-empty x and y')
    nodes, inverse = np.unique(x_arr, return_inverse=True)
    counts = np.bincount(inverse).astype(float)
    means = np.bincount(inverse, weights=y_arr) / counts

    best, best_sse = means, np.inf
    for increasing in (True, False):
        fitted = scipy.optimize.isotonic_regression(means, weights=counts, increasing=increasing).x
        sse = float(np.sum(counts * (fitted - means) ** 2))
        if sse < best_sse:
            best, best_sse = fitted, sse
    return nodes, best


def collapse_residual(data: ScalingDataset, c: float, z: float) -> float:
    """
    Mean squared distance of every rescaled point from the other curves.

    For each N the points of all other chain lengths are pooled and fitted
    with a monotone piecewise-linear g(x), x = T N^z; the held-out points
    inside the pooled x range are compared with it.
    """
    curves = _rescaled_curves(data, c, z)
    if len(curves) < 2:
        raise InvalidInputError('A collapse needs at least two chain lengths')

    squared = []
    for i, (x_i, y_i) in enumerate(curves):
        x_pool = np.concatenate([x_j for j, (x_j, _) in enumerate(curves) if j != i])
        y_pool = np.concatenate([y_j for j, (_, y_j) in enumerate(curves) if j != i])
        nodes, fitted = monotone_interpolant(x_pool, y_pool)
        inside = (x_i >= nodes[0]) & (x_i <= nodes[-1])
        if np.any(inside):
            squared.extend((y_i[inside] - np.interp(x_i[inside], nodes, fitted)) ** 2)

    if not squared:
        raise DegenerateFitError(f'Rescaled curves do not overlap at z = {z:.4f}')
    return float(np.mean(squared))


def _safe_residual(data: ScalingDataset, c: float, z: float) -> float:
    try:
        return collapse_residual(data, c, z)
    except DegenerateFitError:
        return np.inf


def collapse_fit(data: ScalingDataset, c: float, z_range: Sequence[float] = DEFAULT_Z_RANGE,
                 fit_c: bool = False, grid_points: int = Z_GRID_POINTS) -> ScalingFit:
    """
    Fit the dynamical exponent z, and optionally c, by collapsing the curves.

    z is scanned over z_range, the best grid point refined with a bounded
    scalar search. z_err is the half-width of the window where the residual
    stays below twice its minimum, never smaller than half a grid step.

    Args:
        data: E_F surface for two or more chain lengths
        c: Size-term prefactor, held fixed unless fit_c
        z_range: Interval scanned for z
        fit_c: Refine c and z jointly after the scan
        grid_points: Number of z values in the scan

    Returns:
        ScalingFit at the optimum
    """
    if len(data.sizes) < 2:
        raise InvalidInputError(f'Collapse fit needs >= 2 chain lengths, got {data.sizes}')
    z_lo, z_hi = float(z_range[0]), float(z_range[1])
    if not z_lo < z_hi:
        raise InvalidInputError(f'Empty z range [{z_lo}, {z_hi}]')

    grid = np.linspace(z_lo, z_hi, grid_points)
    residuals = np.array([_safe_residual(data, c, z) for z in grid])
    if not np.any(np.isfinite(residuals)):
        raise DegenerateFitError(f'No z in [{z_lo}, {z_hi}] gives overlapping curves')

    best = int(np.argmin(residuals))
    step = grid[1] - grid[0]
    lo, hi = max(z_lo, grid[best] - step), min(z_hi, grid[best] + step)
    refined = scipy.optimize.minimize_scalar(
        lambda z: _safe_residual(data, c, z), bounds=(lo, hi), method='bounded',
        options={'xatol': 1e-10})
    z_best, r_best = grid[best], residuals[best]
    if refined.success and refined.fun <= r_best:
        z_best, r_best = float(refined.x), float(refined.fun)

    if fit_c:
        joint = scipy.optimize.minimize(
            lambda p: _safe_residual(data, p[0], p[1]), np.array([c, z_best]),
            method='Nelder-Mead', options={'xatol': 1e-8, 'fatol': 1e-14})
        if joint.fun <= r_best:
            c, z_best, r_best = float(joint.x[0]), float(joint.x[1]), float(joint.fun)

    window = grid[residuals <= 2.0 * r_best]
    z_err = 0.5 * step
    if len(window):
        z_err = max(z_err, 0.5 * float(window.max() - window.min()))

    x_all, y_all = [], []
    for x, y in _rescaled_curves(data, c, z_best):
        x_all.extend(x)
        y_all.extend(y)
    order = np.argsort(x_all)
    g_table = [(float(x_all[i]), float(y_all[i])) for i in order]

    fit = ScalingFit(c=c, z=float(z_best), z_err=z_err, collapse_residual=max(0.0, r_best),
                     g_table=g_table, residual_at_zero=_safe_residual(data, c, 0.0))
    logger.info(f'Collapse of {data.model_tag or "dataset"} over N={data.sizes}: {fit!r}')
    return fit


def plateau_check(data: ScalingDataset, gap_per_n: Dict[int, float], fraction: float = 0.1,
                  threshold: float = PLATEAU_THRESHOLD) -> List[PlateauRow]:
    """
    E_F(T = fraction * gap) / E_F(T -> 0) for every chain length.

    The lowest temperature of each curve is the baseline and must lie below
    fraction * gap. E_F is also expected to be non-increasing in T from
    0.2 gap on; a violation is logged, not raised.
    """
    rows = []
    for n, (t, e) in sorted(data.curves().items()):
        if n not in gap_per_n:
            raise InvalidInputError(f'No gap given for N={n}')
        gap = float(gap_per_n[n])
        t_check = fraction * gap
        if t[0] >= t_check:
            raise InvalidInputError(f'N={n}: lowest T {t[0]:.4g} is not below {fraction} gap = {t_check:.4g}')
        if t[-1] < t_check:
            raise InvalidInputError(f'N={n}: no data at or above T = {t_check:.4g}')
        baseline = e[0]
        if baseline <= 0:
            raise InvalidInputError(f'N={n}: baseline E_F is {baseline:.3e}, cannot form a ratio')

        ratio = float(np.interp(t_check, t, e) / baseline)
        tail = e[t >= 0.2 * gap]
        monotone = bool(np.all(np.diff(tail) <= MONOTONE_SLACK))
        if not monotone:
            logger.warning(f'N={n}: E_F increases with T above 0.2 gap')
        flagged = ratio < threshold
        if flagged:
            logger.warning(f'N={n}: plateau ratio {ratio:.4f} below {threshold}')
        rows.append(PlateauRow(n_sites=n, gap=gap, ratio=ratio, flagged=flagged, monotone=monotone))
    return rows
