"""Run configuration: dataclasses with defaults, loaded from TOML.

Unknown sections or keys raise ``ConfigError`` so typos never pass silently.
"""
import sys
from dataclasses import asdict, dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .pml_geom import PMLProfile


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConfig:
    eps: float = 1.0
    mu: float = 1.0
    a: float = 0.5
    R: float = 1.0
    d: float = 2.0
    sigma0: float = 4.0
    m: int = 1
    T: float = 4.0
    c0: float = 10.0

    def __post_init__(self):
        if not 0 < self.a < self.R:
            raise ConfigError("need 0 < a < R")
        if self.eps <= 0 or self.mu <= 0 or self.T <= 0:
            raise ConfigError("eps, mu and T must be positive")
        if self.d < 1:
            raise ConfigError(f"layer thickness d={self.d} below 1")

    @property
    def rho(self):
        return self.R + self.d

    @property
    def s1(self):
        return 1.0 / self.T

    @property
    def kappa(self):
        return (self.eps * self.mu) ** 0.5

    def profile(self):
        return PMLProfile(self.R, self.rho, self.sigma0, self.m, self.s1, self.c0)


@dataclass(frozen=True)
class ContourConfig:
    """Contour line Re(s) = abscissa (default 1/T) sampled up to |Im s| = s2_max.

    ``num_freq`` overrides the count derived from s2_max.
    """

    s2_max: float = 64.0
    num_freq: int = None
    horizon_factor: float = 2.0  # t_final = horizon_factor * T
    num_steps: int = 256
    abscissa: float = None

    def __post_init__(self):
        if self.num_freq is not None and (self.num_freq <= 0 or self.num_freq % 2):
            raise ConfigError("num_freq must be a positive even integer")
        if self.horizon_factor < 1:
            raise ConfigError("horizon_factor must be >= 1")


@dataclass(frozen=True)
class GridConfig:
    order: int = 6
    n_inner: int = 16
    layer_density: float = 8.0  # elements per unit of stretched layer length
    n_layer_min: int = 8
    grading: str = "stretched"


@dataclass(frozen=True)
class SourceConfig:
    modes: tuple = ((1, 0), (2, 1))
    polarizations: tuple = ("TE", "TM")
    amplitude: float = 1.0
    r1: float = 0.6
    r2: float = 0.9
    T0: float = 1.5


@dataclass(frozen=True)
class SweepConfig:
    d_values: tuple = (1.0, 1.5, 2.0, 2.5, 3.0)
    sigma0_values: tuple = (4.0,)


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalConfig = field(default_factory=PhysicalConfig)
    contour: ContourConfig = field(default_factory=ContourConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    source: SourceConfig = field(default_factory=SourceConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 0

    def with_physical(self, **kw):
        return replace(self, physical=replace(self.physical, **kw))

    def to_dict(self):
        return asdict(self)


_SECTIONS = {"physical": PhysicalConfig, "contour": ContourConfig, "grid": GridConfig,
             "source": SourceConfig, "sweep": SweepConfig}


def _build(cls, raw, where):
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")
    kw = {}
    for key, val in raw.items():
        if isinstance(val, list):
            val = tuple(tuple(v) if isinstance(v, list) else v for v in val)
        kw[key] = val
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def config_from_dict(raw):
    raw = dict(raw)
    seed = raw.pop("seed", 0)
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    parts = {name: _build(cls, raw.get(name, {}), name) for name, cls in _SECTIONS.items()}
    return RunConfig(seed=int(seed), **parts)


def load_config(path):
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)
