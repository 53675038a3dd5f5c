"""Flat key = value experiment configuration.

One key per line, values written as JSON literals (bare words are read as strings),
``#`` starts a comment. Example::

    experiment = variance
    map.a11 = 1
    map.a12 = 2
    map.a21 = 2
    map.a22 = 5
    n_grid = [64, 128, 256]
    symbol.kind = cos
    symbol.k1 = 1
    symbol.k2 = 0
    seed = 0
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields

from ..dynamics import MapError, validate_cat_map
from ..torus import GAMMA_MAX

EXPERIMENTS = ("spectrum", "variance", "mass", "zeros", "egorov", "kernel", "correlations", "cover")
SYMBOL_KINDS = ("cos", "constant", "bump")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "spectrum"
    a11: int = 1
    a12: int = 2
    a21: int = 2
    a22: int = 5
    n_grid: tuple = (64,)
    gamma: float = 0.1
    gamma_prime: float = 0.15
    symbol_kind: str = "cos"
    symbol_k1: int = 1
    symbol_k2: int = 0
    symbol_px: float = 0.3
    symbol_py: float = 0.4
    seed: int = 0
    grid_oversample: float = 1.0
    scale_prefactor: float = 0.125
    t_max: int = 6
    sample: int = 64
    out_dir: str = "out"

    @property
    def A(self):
        return ((self.a11, self.a12), (self.a21, self.a22))


# file key -> dataclass field
KEYMAP = {
    "experiment": "experiment",
    "map.a11": "a11",
    "map.a12": "a12",
    "map.a21": "a21",
    "map.a22": "a22",
    "n_grid": "n_grid",
    "gamma": "gamma",
    "gamma_prime": "gamma_prime",
    "symbol.kind": "symbol_kind",
    "symbol.k1": "symbol_k1",
    "symbol.k2": "symbol_k2",
    "symbol.px": "symbol_px",
    "symbol.py": "symbol_py",
    "seed": "seed",
    "grid.oversample": "grid_oversample",
    "scale.prefactor": "scale_prefactor",
    "t_max": "t_max",
    "sample": "sample",
    "out_dir": "out_dir",
}
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, value):
    kind = _TYPES[name]
    try:
        if kind == "int":
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind == "tuple":
            if not isinstance(value, list) or any(isinstance(v, bool) or int(v) != v for v in value):
                raise TypeError
            return tuple(int(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot read {value!r} as {kind}") from None
    raise ConfigError(f"{name}: unsupported type {kind}")


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in KEYMAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            parsed = json.loads(val)
        except json.JSONDecodeError:
            parsed = val
        name = KEYMAP[key]
        if name in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[name] = _coerce(name, parsed)
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    d = asdict(cfg)
    lines = []
    for key, name in KEYMAP.items():
        v = d[name]
        lines.append(f"{key} = {json.dumps(list(v) if isinstance(v, tuple) else v)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()


def validate(cfg: ExperimentConfig):
    """Check every downstream precondition; raises ConfigError before any work starts."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    try:
        cmap = validate_cat_map(cfg.A)
    except MapError as exc:
        raise ConfigError(f"map: {exc}") from None
    if cfg.experiment not in ("correlations", "cover", "kernel") and not cmap.admissible:
        raise ConfigError(f"map {cfg.A} cannot be quantized: {cmap.diagnostic}")
    if not cfg.n_grid:
        raise ConfigError("n_grid must be nonempty")
    for N in cfg.n_grid:
        if not 3 <= N <= 8192:
            raise ConfigError(f"n_grid entries must lie in [3, 8192], got {N}")
    if not 0 < cfg.gamma < GAMMA_MAX:
        raise ConfigError(f"gamma must lie in (0, 1/6), got {cfg.gamma}")
    if not 0 < cfg.gamma_prime < GAMMA_MAX:
        raise ConfigError(f"gamma_prime must lie in (0, 1/6), got {cfg.gamma_prime}")
    if not cfg.scale_prefactor > 0:
        raise ConfigError(f"scale.prefactor must be positive, got {cfg.scale_prefactor}")
    for N in cfg.n_grid:
        for g in (cfg.gamma, cfg.gamma_prime):
            eps = cfg.scale_prefactor * math.log(N) ** (-g)
            if eps > 0.25:
                raise ConfigError(f"scale epsilon {eps:.4g} at N={N}, gamma={g} exceeds 1/4; lower scale.prefactor")
    if cfg.symbol_kind not in SYMBOL_KINDS:
        raise ConfigError(f"symbol.kind must be one of {SYMBOL_KINDS}, got {cfg.symbol_kind!r}")
    if cfg.symbol_kind == "cos" and (cfg.symbol_k1, cfg.symbol_k2) == (0, 0):
        raise ConfigError("symbol.kind = cos needs a nonzero frequency (symbol.k1, symbol.k2)")
    if not cfg.grid_oversample >= 1:
        raise ConfigError(f"grid.oversample must be >= 1, got {cfg.grid_oversample}")
    if not 0 <= cfg.t_max <= 16:
        raise ConfigError(f"t_max must lie in [0, 16], got {cfg.t_max}")
    if cfg.sample < 1:
        raise ConfigError(f"sample must be positive, got {cfg.sample}")
    return cmap
