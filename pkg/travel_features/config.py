"""
Pipeline configuration.

A single YAML (or JSON) file maps onto a tree of dataclasses; command-line
flags override individual values. Every module default is reachable from here.
"""

import hashlib
import logging
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import yaml

from .errors import ConfigError
from .models.meanshift import MeanShiftConfig
from .models.plda import ATTRIBUTE_NAMES, BUILTIN_ATTRIBUTES, SAMPLERS, AttributeConfig
from .utils.synthgen import SynthConfig

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class PathsConfig:
    poi_csv: Optional[str] = None
    trajectory_csv: Optional[str] = None
    ground_truth_csv: Optional[str] = None
    out_dir: str = "runs"


@dataclass
class KMeansConfig:
    epsilon: float = 1.0
    max_iter: int = 300
    sweep_k_min: int = 2
    sweep_k_max: int = 12
    sweep_runs: int = 10
    silhouette_sample: Optional[int] = 2000

    def __post_init__(self):
        if not self.epsilon > 0 or self.max_iter < 1:
            raise ConfigError("kmeans.epsilon must be > 0 and kmeans.max_iter >= 1")
        if not 2 <= self.sweep_k_min <= self.sweep_k_max:
            raise ConfigError(f"Invalid K-sweep range [{self.sweep_k_min}, {self.sweep_k_max}]")
        if self.sweep_runs < 0:
            raise ConfigError("kmeans.sweep_runs must be >= 0")


@dataclass
class MatrixConfig:
    dis_m: float = 500.0
    row_total: int = 1000
    min_records: int = 100

    def __post_init__(self):
        if not self.dis_m > 0:
            raise ConfigError(f"matrix.dis_m must be > 0, got {self.dis_m}")
        if self.row_total < 1:
            raise ConfigError(f"matrix.row_total must be >= 1, got {self.row_total}")
        if self.min_records < 0:
            raise ConfigError(f"matrix.min_records must be >= 0, got {self.min_records}")


@dataclass
class LdaConfig:
    attributes: List[str] = field(default_factory=lambda: list(ATTRIBUTE_NAMES))
    alpha: Optional[float] = None
    beta: float = 0.01
    beta_seed: float = 1.0
    n_sweeps: int = 2000
    burn_in: int = 500
    n_restarts: int = 3
    sampler: str = "auto"
    log_every: int = 100
    fold_in_sweeps: int = 200
    k_classes: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        unknown = [a for a in self.attributes if a not in BUILTIN_ATTRIBUTES]
        if unknown:
            raise ConfigError(f"Unknown attributes {unknown}; choose from {list(ATTRIBUTE_NAMES)}")
        if not self.attributes:
            raise ConfigError("lda.attributes must name at least one attribute")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"lda.sampler must be one of {SAMPLERS}")
        if self.n_restarts < 1 or self.n_sweeps < 0 or self.log_every < 1:
            raise ConfigError("lda.n_restarts and lda.log_every must be >= 1, lda.n_sweeps >= 0")
        if self.burn_in < 0:
            raise ConfigError(f"lda.burn_in must be >= 0, got {self.burn_in}")
        for name in self.k_classes:
            if name not in BUILTIN_ATTRIBUTES:
                raise ConfigError(f"lda.k_classes names unknown attribute {name!r}")

    def attribute_configs(self) -> Dict[str, AttributeConfig]:
        """Built-in attribute configs with class-count overrides applied"""
        out = {}
        for name in self.attributes:
            base = BUILTIN_ATTRIBUTES[name]
            k = self.k_classes.get(name)
            out[name] = base if k is None or k == base.k_classes else base.with_k_classes(int(k))
        return out


@dataclass
class EvalConfig:
    train_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"eval.train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass
class LoggingConfig:
    level: str = "INFO"

    def __post_init__(self):
        self.level = str(self.level).upper()
        if self.level not in LOG_LEVELS:
            raise ConfigError(f"logging.level must be one of {LOG_LEVELS}")


@dataclass
class PipelineConfig:
    """Resolved configuration for every stage"""

    paths: PathsConfig = field(default_factory=PathsConfig)
    meanshift: MeanShiftConfig = field(default_factory=MeanShiftConfig)
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    matrix: MatrixConfig = field(default_factory=MatrixConfig)
    lda: LdaConfig = field(default_factory=LdaConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    rng_seed: int = 0
    n_jobs: int = 1
    run_synth: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def digest(self) -> str:
        """Short hash of every setting that can change results"""
        data = self.to_dict()
        data["paths"].pop("out_dir", None)
        data.pop("logging", None)
        data.pop("n_jobs", None)
        text = yaml.safe_dump(data, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.paths.out_dir) / f"run-{self.digest()}"

    def require_paths(self, names: Sequence[str]) -> None:
        """Raise ConfigError unless every named input path is set and exists"""
        for name in names:
            value = getattr(self.paths, name)
            if not value:
                raise ConfigError(f"paths.{name} is not set")
            if not Path(value).is_file():
                raise ConfigError(f"paths.{name} does not exist: {value}")


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _build(cls, data: Optional[Dict[str, Any]], section: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"Config section {section!r} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Unknown keys in {section!r}: {unknown}")

    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name) if name in known else None
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{section}.{name}" if section else name)
        elif isinstance(default, tuple) and isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"Invalid values in {section or 'config'!r}: {e}") from e


def config_from_dict(data: Optional[Dict[str, Any]]) -> PipelineConfig:
    return _build(PipelineConfig, data or {}, "")


def load_config(path: Optional[Union[str, Path]] = None) -> PipelineConfig:
    """
    Load a YAML/JSON config file; defaults apply when no path is given.

    Raises:
        ConfigError: unreadable file, bad syntax, unknown keys or invalid values
    """
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Could not parse config {path}: {e}") from e
    logger.info(f"Loaded configuration from {path}")
    return config_from_dict(data)


def apply_overrides(
    config: PipelineConfig,
    out_dir: Optional[str] = None,
    rng_seed: Optional[int] = None,
    min_records: Optional[int] = None,
    dis_m: Optional[float] = None,
    row_total: Optional[int] = None,
    attributes: Optional[Sequence[str]] = None,
    log_level: Optional[str] = None,
    n_jobs: Optional[int] = None,
) -> PipelineConfig:
    """Return a copy of config with the given command-line values applied"""
    paths = replace(config.paths, out_dir=out_dir) if out_dir is not None else config.paths
    matrix = config.matrix
    if min_records is not None:
        matrix = replace(matrix, min_records=min_records)
    if dis_m is not None:
        matrix = replace(matrix, dis_m=dis_m)
    if row_total is not None:
        matrix = replace(matrix, row_total=row_total)
    lda = replace(config.lda, attributes=list(attributes)) if attributes is not None else config.lda
    log_cfg = LoggingConfig(level=log_level) if log_level is not None else config.logging
    synth = replace(config.synth, rng_seed=rng_seed) if rng_seed is not None else config.synth

    return replace(
        config,
        paths=paths,
        matrix=matrix,
        lda=lda,
        synth=synth,
        logging=log_cfg,
        rng_seed=config.rng_seed if rng_seed is None else rng_seed,
        n_jobs=config.n_jobs if n_jobs is None else n_jobs,
    )
