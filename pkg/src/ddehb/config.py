"""Run configuration: a single nested key/value file (YAML) per run.

Every referenced field is validated before any computation starts and
unknown keys are rejected, so a typo cannot silently fall back to a
default.  The resolved configuration (defaults filled in) is what gets
hashed into the run manifest; output files carry that hash and downstream
commands refuse stale inputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import yaml

from .errors import ConfigError


@dataclass
class ModelConfig:
    name: str = "kotani"
    params: dict = field(default_factory=dict)


@dataclass
class SolverConfig:
    M: int = 20
    anchor_component: int = 0
    tolerance: float = 1e-10
    max_iterations: int = 100


@dataclass
class SeedConfig:
    kind: str = "ansatz"  # ansatz | oracle | file
    amplitude: list = field(default_factory=lambda: [1.0])
    period_guess: float = 6.0
    transient: float = 200.0
    observe_time: float | None = None
    dt: float | None = None  # settle integrator step; default tau/64
    path: str | None = None  # orbit coefficients JSON for kind=file


@dataclass
class ScanConfig:
    mu_min: float = -0.2
    mu_max: float = 0.05
    points: int = 200
    exclude_zero_radius: float = 1e-4


@dataclass
class ResponseConfig:
    quadrature_nodes: int = 64
    legacy_amplitude_normalization: bool = False


@dataclass
class OracleConfig:
    N: int = 2000
    levels: int = 3
    exponents: int = 5
    dt: float | None = None  # DDE integrator step; default tau/64
    prc_phases: int = 16
    prc_periods: int = 20


@dataclass
class OutputConfig:
    directory: str = "out"


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: SeedConfig = field(default_factory=SeedConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    response: ResponseConfig = field(default_factory=ResponseConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    rng_seed: int = 0

    def resolved(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of every section that affects computed results (the output
        location is excluded so moving files does not invalidate them)."""
        payload = self.resolved()
        payload.pop("output")
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {
    "model": ModelConfig,
    "solver": SolverConfig,
    "seed": SeedConfig,
    "scan": ScanConfig,
    "response": ResponseConfig,
    "oracle": OracleConfig,
    "output": OutputConfig,
}

_SCALAR_TYPES = {
    ("model", "name"): str,
    ("seed", "kind"): str,
    ("seed", "path"): (str, type(None)),
    ("seed", "observe_time"): (int, float, type(None)),
    ("seed", "dt"): (int, float, type(None)),
    ("oracle", "dt"): (int, float, type(None)),
    ("response", "legacy_amplitude_normalization"): bool,
}


def _check_field(section: str, key: str, value, default):
    expected = _SCALAR_TYPES.get((section, key))
    if expected is not None:
        if not isinstance(value, expected):
            raise ConfigError(f"{section}.{key}: expected {expected}, got {value!r}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{section}.{key}: expected bool, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key}: expected int, got {value!r}")
        if float(value) != int(value):
            raise ConfigError(f"{section}.{key}: expected int, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key}: expected number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{section}.{key}: expected list, got {value!r}")
        return value
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{section}.{key}: expected mapping, got {value!r}")
        return value
    return value


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at top level")
    cfg = RunConfig()
    for section, value in data.items():
        if section == "rng_seed":
            cfg.rng_seed = _check_field("", "rng_seed", value, 0)
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown configuration section {section!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        target = getattr(cfg, section)
        defaults = _SECTIONS[section]()
        for key, v in value.items():
            if not hasattr(defaults, key):
                raise ConfigError(f"unknown key {section}.{key}")
            setattr(target, key, _check_field(section, key, v, getattr(defaults, key)))
    _validate_semantics(cfg)
    return cfg


def _validate_semantics(cfg: RunConfig):
    from .model import BUILTIN_MODELS

    if cfg.model.name not in BUILTIN_MODELS:
        raise ConfigError(
            f"unknown model {cfg.model.name!r}; built-ins: {sorted(BUILTIN_MODELS)}"
        )
    if cfg.solver.M < 1:
        raise ConfigError(f"solver.M must be >= 1, got {cfg.solver.M}")
    if cfg.solver.tolerance <= 0:
        raise ConfigError("solver.tolerance must be positive")
    if cfg.seed.kind not in ("ansatz", "oracle", "file"):
        raise ConfigError(f"seed.kind must be ansatz|oracle|file, got {cfg.seed.kind!r}")
    if cfg.seed.kind == "file" and not cfg.seed.path:
        raise ConfigError("seed.kind=file requires seed.path")
    if cfg.seed.period_guess <= 0:
        raise ConfigError("seed.period_guess must be positive")
    if cfg.scan.points < 2:
        raise ConfigError("scan.points must be >= 2")
    if not cfg.scan.mu_max > cfg.scan.mu_min:
        raise ConfigError("scan.mu_max must exceed scan.mu_min")
    if cfg.oracle.N < 4:
        raise ConfigError("oracle.N must be >= 4")
    if cfg.oracle.levels not in (1, 2, 3):
        raise ConfigError("oracle.levels must be 1, 2 or 3")
    if cfg.oracle.N % (1 << (cfg.oracle.levels - 1)) != 0:
        raise ConfigError(
            f"oracle.N={cfg.oracle.N} must be divisible by "
            f"{1 << (cfg.oracle.levels - 1)} for {cfg.oracle.levels} levels"
        )
    if cfg.response.quadrature_nodes < 2:
        raise ConfigError("response.quadrature_nodes must be >= 2")


def load_config(path: str, overrides: list[str] = (), out_dir: str | None = None,
                seed_from: str | None = None) -> RunConfig:
    """Load a YAML config file and apply command-line overrides."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from None
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override must look like section.key=value: {ov!r}")
        dotted, _, raw = ov.partition("=")
        keys = dotted.strip().split(".")
        node = data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through non-mapping at {k!r}")
        node[keys[-1]] = yaml.safe_load(raw)
    if seed_from is not None:
        data.setdefault("seed", {})["kind"] = seed_from
    if out_dir is not None:
        data.setdefault("output", {})["directory"] = out_dir
    return config_from_dict(data)
