"""Configuration constants and experiment configuration for bridgelab."""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from bridgelab.exceptions import ConfigError

# Natural units: hbar = m = 1.
DEFAULT_HBAR = 1.0
DEFAULT_MASS = 1.0
DEFAULT_SIGMA = 1.0

# Points with rho below this fraction of max(rho) carry no phase information.
# Densities must integrate to one within NORM_TOLERANCE.
DENSITY_THRESHOLD = 1e-13
NORM_TOLERANCE = 1e-8
# Largest |s|/hbar accepted by the exponential (phi, phi-hat) representation.
ACTION_OVERFLOW = 300.0
# Largest phase change between neighbouring resolved points for a wave function
# to count as sampled finely enough for spectral derivatives.
PHASE_STEP_LIMIT = math.pi / 4.0
FISHER_FLOOR = 1e-300
# Default domain half-width in standard deviations of the widest Gaussian.
TRUNCATION_STDS = 10.0

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
ANTI_HEAT_CUTOFF = 2.0 / 3.0
ANTI_HEAT_BUDGET = 1e-12
DEFAULT_WIDTH_FLOOR = 1e-3
# Derivative magnitudes below this are inconclusive for the sign property.
SIGN_MAGNITUDE_FLOOR = 1e-8

DEFAULT_SEED = 0
DEFAULT_FORMAT = "csv"
CSV_DIGITS = 17

EXPERIMENTS = ["propagate", "bridge", "collapse", "nlgt-sweep", "curvature", "check"]
GRID_MODES = ["closed", "periodic"]
OUTPUT_FORMATS = ["csv", "json"]

EXPERIMENT_DEFAULTS = {
    "propagate": {
        "grid": {"x_min": -40.0, "x_max": 40.0, "n": 1024, "mode": "periodic"},
        "schedule": {"t": 2.0, "dt": 0.01, "n_samples": 9},
    },
    "bridge": {
        "grid": {"x_min": -15.0, "x_max": 15.0, "n": 1024, "mode": "closed"},
        "schedule": {"t": 2.0, "tau": 1.0, "dtau": 1e-3, "n_samples": 5},
    },
    "collapse": {
        "grid": {"x_min": -10.0, "x_max": 10.0, "n": 2048, "mode": "closed"},
        "schedule": {"tau": 1.0, "n_samples": 9},
    },
    "nlgt-sweep": {
        "grid": {"x_min": -20.0, "x_max": 20.0, "n": 512, "mode": "periodic"},
        "schedule": {},
    },
    "curvature": {
        "grid": {"x_min": -20.0, "x_max": 20.0, "n": 512, "mode": "periodic"},
        "schedule": {"dtau": 1e-3, "n_samples": 4},
        "state": {"p0": 0.0},
    },
    "check": {
        "grid": {"x_min": -16.0, "x_max": 16.0, "n": 256, "mode": "periodic"},
        "schedule": {"t": 1.0, "tau": 1.0, "dtau": 1e-3, "n_samples": 50},
    },
}


@dataclass(frozen=True)
class GridConfig:
    x_min: float = -20.0
    x_max: float = 20.0
    n: int = 512
    mode: str = "periodic"


@dataclass(frozen=True)
class PhysicsConfig:
    hbar: float = DEFAULT_HBAR
    mass: float = DEFAULT_MASS
    sigma: float = DEFAULT_SIGMA


@dataclass(frozen=True)
class ScheduleConfig:
    t: float = 2.0
    tau: float = 1.0
    dt: float = 0.01
    dtau: float = 1e-3
    n_samples: int = 9


@dataclass(frozen=True)
class OutputConfig:
    path: Path | None = None
    format: str = DEFAULT_FORMAT


@dataclass(frozen=True)
class SolverConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER


@dataclass(frozen=True)
class StateConfig:
    p0: float = 1.0
    alpha_min: float = -3.0
    alpha_max: float = 3.0
    alpha_step: float = 0.1


@dataclass(frozen=True)
class CollapseConfig:
    x_m: float = 2.0
    width_floor: float = DEFAULT_WIDTH_FLOOR


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated parameters of one experiment run."""

    experiment: str
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    state: StateConfig = field(default_factory=StateConfig)
    collapse: CollapseConfig = field(default_factory=CollapseConfig)
    seed: int = DEFAULT_SEED

    def alphas(self):
        """NLGT sweep values, inclusive of both ends."""
        count = int(round((self.state.alpha_max - self.state.alpha_min) / self.state.alpha_step))
        return [self.state.alpha_min + i * self.state.alpha_step for i in range(count + 1)]

    def default_output(self):
        """Output path used when neither the config nor the command line gives one."""
        return Path.cwd() / f"{self.experiment}.bridgelab.{self.output.format}"


_SECTIONS = {
    "grid": GridConfig,
    "physics": PhysicsConfig,
    "schedule": ScheduleConfig,
    "output": OutputConfig,
    "solver": SolverConfig,
    "state": StateConfig,
    "collapse": CollapseConfig,
}

_POSITIVE = {
    "physics.hbar",
    "physics.mass",
    "physics.sigma",
    "schedule.tau",
    "schedule.dt",
    "schedule.dtau",
    "solver.tol",
    "state.alpha_step",
    "collapse.width_floor",
}


def _coerce(key, raw, annotation):
    """Convert one raw string value to the field's type."""
    try:
        if annotation in (int, "int"):
            value = int(raw)
        elif annotation in (float, "float"):
            value = float(raw)
        elif annotation in (str, "str"):
            value = raw
        else:
            value = Path(raw)
    except ValueError as e:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from e
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite, got {raw!r}")
    return value


def build_config(experiment, values=None):
    """Build a validated ExperimentConfig from dotted key/value pairs.

    Args:
        experiment: Experiment name, one of EXPERIMENTS.
        values: Mapping of dotted keys (e.g. "physics.hbar") to raw string or
            typed values. Keys absent here fall back to EXPERIMENT_DEFAULTS and
            then to the dataclass defaults.

    Returns:
        ExperimentConfig.

    Raises:
        ConfigError: unknown experiment or key, unparsable or invalid value.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    values = dict(values or {})

    file_experiment = values.pop("experiment", None)
    if file_experiment is not None and file_experiment != experiment:
        raise ConfigError(
            f"config is for experiment {file_experiment!r} but {experiment!r} was requested"
        )

    seed = DEFAULT_SEED
    if "seed" in values:
        seed = _coerce("seed", str(values.pop("seed")), int)

    sections = {}
    defaults = EXPERIMENT_DEFAULTS[experiment]
    for name, cls in _SECTIONS.items():
        sections[name] = replace(cls(), **defaults.get(name, {}))

    for key, raw in values.items():
        section, _, attr = key.partition(".")
        if section not in _SECTIONS or not attr:
            raise ConfigError(f"unknown config key {key!r}")
        cls = _SECTIONS[section]
        annotations = cls.__annotations__
        if attr not in annotations:
            raise ConfigError(f"unknown config key {key!r}")
        annotation = annotations[attr]
        if section == "output" and attr == "path":
            annotation = Path
        value = _coerce(key, str(raw), annotation)
        sections[section] = replace(sections[section], **{attr: value})

    config = ExperimentConfig(experiment=experiment, seed=seed, **sections)
    validate_config(config)
    return config


def validate_config(config):
    """Check dimensional and enum constraints; raise ConfigError on the first violation."""
    for key in sorted(_POSITIVE):
        section, attr = key.split(".")
        value = getattr(getattr(config, section), attr)
        if not value > 0:
            raise ConfigError(f"{key} must be positive, got {value}")
    if config.grid.mode not in GRID_MODES:
        raise ConfigError(f"grid.mode must be one of {GRID_MODES}, got {config.grid.mode!r}")
    if not config.grid.x_max > config.grid.x_min:
        raise ConfigError("grid.x_max must exceed grid.x_min")
    if config.grid.n < 8:
        raise ConfigError(f"grid.n must be at least 8, got {config.grid.n}")
    if config.grid.mode == "periodic" and config.grid.n & (config.grid.n - 1):
        raise ConfigError(f"grid.n must be a power of two on periodic grids, got {config.grid.n}")
    if config.output.format not in OUTPUT_FORMATS:
        raise ConfigError(
            f"output.format must be one of {OUTPUT_FORMATS}, got {config.output.format!r}"
        )
    if config.schedule.n_samples < 1:
        raise ConfigError("schedule.n_samples must be at least 1")
    if config.schedule.t < 0:
        raise ConfigError("schedule.t must be non-negative")
    if config.solver.max_iter < 1:
        raise ConfigError("solver.max_iter must be at least 1")
    if config.state.alpha_max < config.state.alpha_min:
        raise ConfigError("state.alpha_max must not be below state.alpha_min")
