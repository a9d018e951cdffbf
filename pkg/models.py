"""
Data models for the TTO / EoF toolkit
"""

from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

import numpy as np

from config import ARTIFACT_VERSION
from errors import InvalidInputError

MODEL_KINDS = ('ising', 'xxz')


@dataclass(frozen=True)
class ModelSpec:
    """Periodic spin-1/2 chain: transverse-field Ising (h) or XXZ (xi)."""

    kind: str
    n_sites: int
    h: Optional[float] = None  # Ising only
    xi: Optional[float] = None  # XXZ only
    coupling: float = 1.0
    boundary: str = 'periodic'
    local_dim: int = 2

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise InvalidInputError(f'Unknown model kind: {self.kind}')
        if self.n_sites < 2:
            raise InvalidInputError(f'Chain needs N >= 2 sites, got {self.n_sites}')
        if self.boundary != 'periodic':
            raise InvalidInputError(f'Only periodic boundaries are supported, got {self.boundary}')
        if self.local_dim != 2:
            raise InvalidInputError('Only spin-1/2 chains (d = 2) are supported')
        if self.kind == 'ising' and (self.h is None or self.xi is not None):
            raise InvalidInputError('Ising model takes a field h and no anisotropy')
        if self.kind == 'xxz' and (self.xi is None or self.h is not None):
            raise InvalidInputError('XXZ model takes an anisotropy xi and no field')

    @property
    def parameter(self) -> float:
        return self.h if self.kind == 'ising' else self.xi  # type: ignore[return-value]

    @property
    def hilbert_dim(self) -> int:
        return self.local_dim ** self.n_sites

    def tag(self) -> str:
        name = 'h' if self.kind == 'ising' else 'xi'
        return f'{self.kind}({name}={self.parameter:g})'

    def resized(self, n_sites: int) -> 'ModelSpec':
        return ModelSpec(self.kind, n_sites, self.h, self.xi, self.coupling)


@dataclass(frozen=True)
class ThermalSpec:
    """Thermal state of a chain at temperature T truncated to K0 eigenstates."""

    model: ModelSpec
    temperature: float
    kraus_dim: int

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise InvalidInputError(f'Temperature must be > 0, got {self.temperature}')
        if not 1 <= self.kraus_dim <= self.model.hilbert_dim:
            raise InvalidInputError(
                f'K0 must lie in [1, {self.model.hilbert_dim}], got {self.kraus_dim}')


@dataclass
class EofOptions:
    """Knobs of the convex-roof search. max_evals defaults to 200 K^2."""

    max_evals: Optional[int] = None
    restarts: int = 3
    seed: int = 0
    ftol: float = 1e-8
    xtol: float = 1e-8
    simplex_step: float = 0.5
    perturbation: float = 1.0
    k_extra: int = 0
    random_rows: bool = False

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise InvalidInputError(f'restarts must be >= 1, got {self.restarts}')
        if self.k_extra < 0:
            raise InvalidInputError(f'k_extra must be >= 0, got {self.k_extra}')
        if self.max_evals is not None and self.max_evals < 1:
            raise InvalidInputError(f'max_evals must be >= 1, got {self.max_evals}')

    def budget(self, k: int) -> int:
        return self.max_evals if self.max_evals is not None else 200 * k * k


@dataclass
class EofResult:
    """Upper bound on the entanglement of formation, in bits."""

    value: float
    best_generator: np.ndarray
    K: int
    K0: int
    M: Optional[int]
    evaluations: int
    restarts_used: int
    converged: bool
    initial_value: float
    trace: List[float] = field(default_factory=list)

    def __repr__(self) -> str:
        return f'<EofResult {self.value:.6f} bits K={self.K} K0={self.K0} evals={self.evaluations}>'


@dataclass
class RunConfig:
    """Resolved settings of one command invocation."""

    command: str
    parameters: Dict[str, Any]
    seed: Optional[int] = None
    output_path: Optional[str] = None
    format: str = 'csv'
    parallel_workers: int = 1

    def __post_init__(self) -> None:
        if self.format not in ('csv', 'json'):
            raise InvalidInputError(f'Unknown output format: {self.format}')
        if self.parallel_workers < 1:
            raise InvalidInputError('parallel_workers must be >= 1')


def format_value(value: Any) -> str:
    """Serialize a value for CSV; floats keep 17 significant digits, lists are comma-joined."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ','.join(format_value(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def flatten_parameters(parameters: Dict[str, Any]) -> str:
    """Render parameters as sorted key=value pairs joined by ';'."""
    return ';'.join(f'{key}={format_value(parameters[key])}' for key in sorted(parameters))


def parse_parameters(text: str) -> Dict[str, str]:
    """Inverse of flatten_parameters, values kept as strings."""
    if not text:
        return {}
    pairs = (item.split('=', 1) for item in text.split(';'))
    return {key: value for key, value in pairs}


@dataclass
class ResultRecord:
    """One row of experiment output."""

    command: str
    parameters: Dict[str, Any]
    E_F: float
    exact_eof: Optional[float] = None
    abs_error: Optional[float] = None
    K0: Optional[int] = None
    K: Optional[int] = None
    M: Optional[int] = None
    evaluations: Optional[int] = None
    wall_time_seconds: Optional[float] = None
    converged: Optional[bool] = None
    seed: Optional[int] = None
    artifact_version: str = ARTIFACT_VERSION

    def __post_init__(self) -> None:
        if self.exact_eof is not None and self.abs_error is None:
            self.abs_error = abs(self.E_F - self.exact_eof)
        if self.exact_eof is None:
            self.abs_error = None

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> Dict[str, str]:
        row = {}
        for name in self.field_names():
            value = getattr(self, name)
            row[name] = flatten_parameters(value) if name == 'parameters' else format_value(value)
        return row

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.field_names()}

    def __repr__(self) -> str:
        return f'<ResultRecord {self.command} E_F={self.E_F:.6g}>'
