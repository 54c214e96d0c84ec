"""Run configuration: one JSON document, validated before any computation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .torus_dynamics import Rotation

__all__ = [
    "FamilyConfig", "FindBetacConfig", "LinesConfig", "LyapunovConfig", "DimensionConfig",
    "MultiscaleConfig", "VerifyConfig", "RunConfig", "load_config", "bracket_key",
]

GENERATORS = ("orbit", "graph", "unit_square", "sine", "atom")


def _num(v, name, lo=None, hi=None, lo_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if integer and (not float(v).is_integer()):
        raise ConfigError(f"{name} must be an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{name} must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{name} must be <= {hi}")
    return int(v) if integer else float(v)


def _int(v, name, lo=None, hi=None):
    return _num(v, name, lo, hi, integer=True)


def _beta(v, name, allow_none=True):
    if v is None and allow_none:
        return None
    if v == "critical":
        return v
    return _num(v, name, 0.0, 1.0)


def _build(cls, data, name):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(extra)}")
    obj = cls(**data)
    obj.validate(name)
    return obj


@dataclass
class FamilyConfig:
    a: float = 40.0
    beta: object = "critical"
    x_lo: float = -3.0

    def validate(self, name):
        self.a = _num(self.a, f"{name}.a", 0.0, lo_open=True)
        self.beta = _beta(self.beta, f"{name}.beta", allow_none=False)
        self.x_lo = _num(self.x_lo, f"{name}.x_lo")
        if not self.x_lo < 0:
            raise ConfigError(f"{name}.x_lo must be negative")


@dataclass
class FindBetacConfig:
    tol: float = 1e-5
    budget: int = 10_000
    m: int = 4096
    safety_margin: float = 0.0
    lo: float = 0.0
    hi: float = 1.0

    def validate(self, name):
        self.tol = _num(self.tol, f"{name}.tol", 0.0, 1.0, lo_open=True)
        self.budget = _int(self.budget, f"{name}.budget", 1)
        self.m = _int(self.m, f"{name}.m", 2)
        self.safety_margin = _num(self.safety_margin, f"{name}.safety_margin", 0.0)
        self.lo = _num(self.lo, f"{name}.lo", 0.0, 1.0)
        self.hi = _num(self.hi, f"{name}.hi", 0.0, 1.0)
        if not self.lo < self.hi:
            raise ConfigError(f"{name}.lo must be below {name}.hi")


@dataclass
class LinesConfig:
    beta: object = 0.48714
    n: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    m: int = 4096

    def validate(self, name):
        self.beta = _beta(self.beta, f"{name}.beta")
        if not isinstance(self.n, list) or not self.n:
            raise ConfigError(f"{name}.n must be a nonempty list")
        self.n = [_int(v, f"{name}.n", 0) for v in self.n]
        self.m = _int(self.m, f"{name}.m", 2)


@dataclass
class LyapunovConfig:
    beta: object = None
    beta_offset: float = -0.01
    N: int = 1_000_000
    burn_in: int = 10_000
    n_blocks: int = 100
    theta0: float = 0.0

    def validate(self, name):
        self.beta = _beta(self.beta, f"{name}.beta")
        self.beta_offset = _num(self.beta_offset, f"{name}.beta_offset", -1.0, 1.0)
        self.N = _int(self.N, f"{name}.N", 1)
        self.burn_in = _int(self.burn_in, f"{name}.burn_in", 0)
        self.n_blocks = _int(self.n_blocks, f"{name}.n_blocks", 2)
        if self.n_blocks > self.N:
            raise ConfigError(f"{name}.n_blocks exceeds {name}.N")
        self.theta0 = _num(self.theta0, f"{name}.theta0", 0.0, 1.0)


@dataclass
class DimensionConfig:
    beta: object = None
    generator: str = "orbit"
    n_points: int = 10_000_000
    burn_in: int = 10_000
    m: int = 65536
    N: int = 10_000
    eps_max: float = 0.0625
    eps_min: float = 0.0009765625
    information: bool = True
    num_centers: int = 2000

    def validate(self, name):
        self.beta = _beta(self.beta, f"{name}.beta")
        if self.generator not in GENERATORS:
            raise ConfigError(f"{name}.generator must be one of {', '.join(GENERATORS)}")
        self.n_points = _int(self.n_points, f"{name}.n_points", 2)
        self.burn_in = _int(self.burn_in, f"{name}.burn_in", 0)
        self.m = _int(self.m, f"{name}.m", 2)
        self.N = _int(self.N, f"{name}.N", 0)
        self.eps_max = _num(self.eps_max, f"{name}.eps_max", 0.0, 1.0, lo_open=True)
        self.eps_min = _num(self.eps_min, f"{name}.eps_min", 0.0, self.eps_max, lo_open=True)
        if not isinstance(self.information, bool):
            raise ConfigError(f"{name}.information must be true or false")
        self.num_centers = _int(self.num_centers, f"{name}.num_centers", 1)


@dataclass
class MultiscaleConfig:
    beta: object = None
    m: int = 4096
    max_level: int = 1

    def validate(self, name):
        self.beta = _beta(self.beta, f"{name}.beta")
        self.m = _int(self.m, f"{name}.m", 16)
        self.max_level = _int(self.max_level, f"{name}.max_level", 0, 8)


@dataclass
class VerifyConfig:
    beta: object = None
    N: int = 2000
    m: int = 256
    slack: float = 1e-12
    recurrence_n: int = 50
    inverse_samples: int = 100_000
    roundtrip_length: int = 5
    roundtrip_samples: int = 1000
    m_regions: int = 4096
    max_level: int = 1
    shadow_n: int = 1000
    shadow_samples: int = 200
    omega_j: int = 1
    omega_n: int = 1000
    omega_m: int = 4096

    def validate(self, name):
        self.beta = _beta(self.beta, f"{name}.beta")
        for key in ("N", "recurrence_n", "inverse_samples", "roundtrip_length", "roundtrip_samples",
                    "shadow_n", "shadow_samples", "omega_j", "omega_n"):
            setattr(self, key, _int(getattr(self, key), f"{name}.{key}", 1))
        for key in ("m", "omega_m"):
            setattr(self, key, _int(getattr(self, key), f"{name}.{key}", 2))
        self.m_regions = _int(self.m_regions, f"{name}.m_regions", 16)
        self.max_level = _int(self.max_level, f"{name}.max_level", 0, 8)
        self.slack = _num(self.slack, f"{name}.slack", 0.0)


_BLOCKS = {
    "find_betac": FindBetacConfig, "lines": LinesConfig, "lyapunov": LyapunovConfig,
    "dimension": DimensionConfig, "multiscale": MultiscaleConfig, "verify": VerifyConfig,
}


@dataclass
class RunConfig:
    family: FamilyConfig
    rotation: object
    seed: int
    cache_dir: str | None
    find_betac: FindBetacConfig
    lines: LinesConfig
    lyapunov: LyapunovConfig
    dimension: DimensionConfig
    multiscale: MultiscaleConfig
    verify: VerifyConfig

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {"family", "rotation", "seed", "cache_dir", *_BLOCKS}
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(f"unknown top-level key(s): {', '.join(extra)}")
        rotation = data.get("rotation", "golden")
        if rotation != "golden":
            rotation = _num(rotation, "rotation", 0.0, 1.0, lo_open=True)
            if rotation >= 1.0:
                raise ConfigError("rotation must lie in (0, 1)")
        seed = _int(data.get("seed", 0), "seed", 0, 2**64 - 1)
        cache_dir = data.get("cache_dir")
        if cache_dir is not None and not isinstance(cache_dir, str):
            raise ConfigError("cache_dir must be a string or null")
        blocks = {k: _build(c, data.get(k), k) for k, c in _BLOCKS.items()}
        return cls(_build(FamilyConfig, data.get("family"), "family"), rotation, seed, cache_dir, **blocks)

    def rotation_obj(self) -> Rotation:
        return Rotation.golden() if self.rotation == "golden" else Rotation(self.rotation, "explicit")

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path, seed: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if seed is not None:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data, seed=seed)
    return RunConfig.from_dict(data)


def bracket_key(cfg: RunConfig) -> str:
    """Cache key of the critical-parameter bracket for this family and search."""
    fb = cfg.find_betac
    key = {"a": cfg.family.a, "tol": fb.tol, "budget": fb.budget, "m": fb.m,
           "omega": cfg.rotation_obj().omega, "x_lo": cfg.family.x_lo,
           "safety_margin": fb.safety_margin, "lo": fb.lo, "hi": fb.hi}
    text = json.dumps(key, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
