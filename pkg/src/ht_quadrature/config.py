"""
Run configuration for ht-quadrature.

One dataclass per section (mesh, degrees, quadrature, spectral, solver,
parallel, output, logging), read from YAML with ``HTQ_*`` environment
overrides and checked by ``Config.validate`` before anything is computed.
"""

import os
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple
import yaml
from dataclasses import dataclass, field, asdict

from .exceptions import ConfigurationError


logger = logging.getLogger(__name__)

# variable -> (section, key, converter)
ENV_OVERRIDES: Dict[str, Tuple[str, str, Callable[[str], Any]]] = {
    "HTQ_THREADS": ("parallel", "threads", int),
    "HTQ_OUTPUT_DIR": ("output", "dir", str),
    "HTQ_LOG_LEVEL": ("logging", "level", str),
    "HTQ_SPECTRAL_KF": ("spectral", "K_F", int),
}


@dataclass
class MeshConfig:
    """Configuration for the temporal mesh."""
    kind: str = "dyadic"
    N: int = 6
    T: float = 10.0
    sigma: float = 0.17
    breakpoints: Optional[List[float]] = None

    def validate(self) -> None:
        if self.kind not in ("uniform", "geometric", "dyadic", "explicit"):
            raise ConfigurationError(f"mesh.kind must be uniform|geometric|dyadic|explicit, got '{self.kind}'")
        if self.kind == "explicit":
            if not self.breakpoints or len(self.breakpoints) < 2:
                raise ConfigurationError("mesh.breakpoints needs at least two values for an explicit mesh")
        elif int(self.N) < 1:
            raise ConfigurationError(f"mesh.N must be >= 1, got {self.N}")
        if not float(self.T) > 0:
            raise ConfigurationError(f"mesh.T must be positive, got {self.T}")
        if self.kind == "geometric" and not 0 < float(self.sigma) < 1:
            raise ConfigurationError(f"mesh.sigma must lie in (0, 1), got {self.sigma}")

    def as_spec(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DegreeConfig:
    """Configuration for the polynomial degree vector."""
    spec: str = "uniform:2"

    def validate(self) -> None:
        if not str(self.spec).strip():
            raise ConfigurationError("degrees.spec is empty")


@dataclass
class QuadratureConfig:
    """Configuration for the Gauss rule orders."""
    K: Optional[int] = None
    K_log: Optional[int] = None
    K_min: int = 2
    K_max: int = 20

    def validate(self) -> None:
        for name in ("K", "K_log"):
            value = getattr(self, name)
            if value is not None and not 1 <= int(value) <= 64:
                raise ConfigurationError(f"quadrature.{name} must lie in 1..64, got {value}")
        if not 1 <= int(self.K_min) <= int(self.K_max) <= 64:
            raise ConfigurationError(
                f"quadrature range needs 1 <= K_min <= K_max <= 64, got {self.K_min}..{self.K_max}"
            )


@dataclass
class SpectralConfig:
    """Configuration for the spectral oracle."""
    K_F: int = 4000
    tol: float = 1e-10
    accelerate: bool = True
    certify: bool = True

    def validate(self) -> None:
        if int(self.K_F) < 8:
            raise ConfigurationError(f"spectral.K_F must be >= 8, got {self.K_F}")
        if not float(self.tol) > 0:
            raise ConfigurationError(f"spectral.tol must be positive, got {self.tol}")


@dataclass
class SolverConfig:
    """Configuration for the model ODE and the convergence studies."""
    kind: str = "parabolic"
    mu: float = 0.0
    load: str = "power:0.75"
    study: str = "hp"
    p: int = 2
    sigma: float = 0.17
    N_min: int = 2
    N_max: int = 10
    T: float = 1.0
    K: int = 20

    def validate(self) -> None:
        if self.kind not in ("parabolic", "hyperbolic"):
            raise ConfigurationError(f"solver.kind must be parabolic|hyperbolic, got '{self.kind}'")
        if float(self.mu) < 0:
            raise ConfigurationError(f"solver.mu must be >= 0, got {self.mu}")
        if self.study not in ("h", "hp"):
            raise ConfigurationError(f"solver.study must be h|hp, got '{self.study}'")
        if int(self.p) < 1:
            raise ConfigurationError(f"solver.p must be >= 1, got {self.p}")
        if not 0 < float(self.sigma) < 1:
            raise ConfigurationError(f"solver.sigma must lie in (0, 1), got {self.sigma}")
        if not 1 <= int(self.N_min) <= int(self.N_max):
            raise ConfigurationError(f"solver levels need 1 <= N_min <= N_max, got {self.N_min}..{self.N_max}")
        if self.study == "hp" and int(self.N_min) < 2:
            raise ConfigurationError("hp study needs N_min >= 2 (geometric meshes)")
        if not float(self.T) > 0:
            raise ConfigurationError(f"solver.T must be positive, got {self.T}")
        if not 1 <= int(self.K) <= 64:
            raise ConfigurationError(f"solver.K must lie in 1..64, got {self.K}")


@dataclass
class ParallelConfig:
    """Configuration for block-level parallelism."""
    threads: int = 1

    def validate(self) -> None:
        if int(self.threads) < 1:
            raise ConfigurationError(f"parallel.threads must be >= 1, got {self.threads}")


@dataclass
class OutputConfig:
    """Configuration for result files."""
    dir: str = "results"
    digits: int = 17
    plot_script: bool = True

    def validate(self) -> None:
        if not 1 <= int(self.digits) <= 17:
            raise ConfigurationError(f"output.digits must lie in 1..17, got {self.digits}")


@dataclass
class LoggingConfig:
    """Root logger settings."""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file: Optional[str] = "htq.log"
    console: bool = True


@dataclass
class Config:
    """All sections of one htq run."""
    mesh: MeshConfig = field(default_factory=MeshConfig)
    degrees: DegreeConfig = field(default_factory=DegreeConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    parallel: ParallelConfig = field(default_factory=ParallelConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "Config":
        """Build every section from a mapping laid out like config.yaml."""
        data = data or {}
        try:
            return cls(
                mesh=MeshConfig(**data.get("mesh", {})),
                degrees=DegreeConfig(**data.get("degrees", {})),
                quadrature=QuadratureConfig(**data.get("quadrature", {})),
                spectral=SpectralConfig(**data.get("spectral", {})),
                solver=SolverConfig(**data.get("solver", {})),
                parallel=ParallelConfig(**data.get("parallel", {})),
                output=OutputConfig(**data.get("output", {})),
                logging=LoggingConfig(**data.get("logging", {})),
            )
        except TypeError as e:
            raise ConfigurationError(f"unknown configuration key: {e}") from e

    @classmethod
    def from_yaml(cls, config_path: str) -> "Config":
        """Read a YAML file, then apply the HTQ_* overrides."""
        try:
            config_path = Path(config_path)
            if not config_path.exists():
                raise FileNotFoundError(f"Config file not found: {config_path}")

            with open(config_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
            if not isinstance(data, dict):
                raise ConfigurationError(f"{config_path} must hold a mapping of sections")

            data = cls._apply_env_overrides(data)

            logger.info(f"Configuration loaded from {config_path}")
            return cls.from_dict(data)

        except Exception as e:
            logger.error(f"Failed to load config: {e}")
            raise

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> "Config":
        """Load from a file when given, else defaults plus environment overrides."""
        if config_path:
            return cls.from_yaml(config_path)
        return cls.from_dict(cls._apply_env_overrides({}))

    @staticmethod
    def _apply_env_overrides(config_data: Dict[str, Any]) -> Dict[str, Any]:
        """Write the ``HTQ_*`` variables that are set into their section keys."""
        for env_var, (section, key, convert) in ENV_OVERRIDES.items():
            raw = os.getenv(env_var)
            if raw is None:
                continue
            try:
                value = convert(raw)
            except ValueError:
                raise ConfigurationError(f"{env_var} must be {convert.__name__}, got '{raw}'") from None
            if config_data.get(section) is None:
                config_data[section] = {}
            config_data[section][key] = value
            logger.info(f"Config override from {env_var}: {section}.{key} = {value}")

        return config_data

    def validate(self) -> "Config":
        """Check every section; raises ConfigurationError on the first violation."""
        for section in (
            self.mesh, self.degrees, self.quadrature, self.spectral,
            self.solver, self.parallel, self.output,
        ):
            section.validate()
        if self.logging.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigurationError(f"logging.level '{self.logging.level}' is not a logging level")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def setup_logging(config: LoggingConfig, log_dir: str = "logs") -> None:
    """Console and optional file logging; the file goes under ``log_dir``."""
    level = getattr(logging, config.level.upper(), logging.INFO)

    formatter = logging.Formatter(config.format)
    handlers: List[logging.Handler] = []

    if config.console:
        handlers.append(logging.StreamHandler())
    if config.file:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(Path(log_dir) / config.file, encoding='utf-8'))
    for handler in handlers:
        handler.setFormatter(formatter)

    # handlers from an earlier run (tests, replay) are replaced
    logging.basicConfig(level=level, format=config.format, handlers=handlers, force=True)

    logger.info(f"Logging configured: level={config.level}, file={config.file}")
