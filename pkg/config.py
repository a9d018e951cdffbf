"""Runtime settings for the TTO / EoF toolkit."""

import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional

from dotenv import dotenv_values, load_dotenv

from errors import UsageError

# Load environment variables
load_dotenv()

ARTIFACT_VERSION = '1.0.0'

# Logging
LOG_FORMAT = '%(asctime)s %(levelname)s [%(name)s] %(message)s'
DEFAULT_LOG_LEVEL = 'info'

# Dense exact diagonalization stops here (2^14 = 16384 basis states)
MAX_DENSE_SITES = 14


@dataclass(frozen=True)
class Settings:
    """Process-wide knobs that do not belong to a single experiment."""

    workers: int = 1
    log_level: str = DEFAULT_LOG_LEVEL
    config_path: Optional[str] = None

    @classmethod
    def from_env(cls) -> 'Settings':
        """Read THREADS, LOG_LEVEL and EOF_CONFIG, falling back to defaults."""
        threads = os.getenv('THREADS')
        workers = 1
        if threads:
            try:
                workers = max(1, int(threads))
            except ValueError:
                raise UsageError(f'THREADS must be an integer, got {threads!r}')
        return cls(
            workers=workers,
            log_level=os.getenv('LOG_LEVEL', DEFAULT_LOG_LEVEL),
            config_path=os.getenv('EOF_CONFIG'),
        )


def configure_logging(level: str = DEFAULT_LOG_LEVEL) -> None:
    """Install a single stderr handler on the root logger."""
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise UsageError(f'Unknown log level: {level}')

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(numeric)


def read_config_file(path: str, allowed_keys) -> Dict[str, str]:
    """
    Parse a flat key=value configuration file.

    Keys may use dashes or underscores; they are normalised to the
    underscore form of the command's option names.

    Args:
        path: Location of the file
        allowed_keys: Option names accepted by the running command

    Returns:
        Mapping of option name to raw string value
    """
    if not os.path.exists(path):
        raise UsageError(f'Config file not found: {path}')

    raw = dotenv_values(path)
    allowed = set(allowed_keys)
    values: Dict[str, str] = {}
    unknown = []
    for key, value in raw.items():
        name = key.strip().lower().replace('-', '_')
        if name not in allowed:
            unknown.append(key)
            continue
        if value is None:
            raise UsageError(f'Config key {key!r} has no value')
        values[name] = value

    if unknown:
        raise UsageError(f'Unknown config keys: {", ".join(sorted(unknown))}')
    return values
