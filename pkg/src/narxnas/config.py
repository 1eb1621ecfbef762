"""Search configuration.

Field names follow the conventional symbol names (``popSize``, ``pMutW``, ...)
so a config file can be checked against the parameter tables line by line.
The file format is flat ``key=value`` text, ``#`` starting a comment.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

ALGORITHMS = ("dnas1", "dnas2", "dnas3", "dnas4", "exhaustive")
TRAINERS = ("lm", "br", "scg")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class NasConfig:
    algorithm: str = "dnas3"
    maxLay: int = 1
    maxNinLay: int = 20
    du: int = 5
    dy: int = 5
    duMax: int = 50
    dyMax: int = 50
    popSize: int = 50
    pCross: float = 0.8
    p1: float = 1.0
    p2: float = 0.01
    p3: float = 0.0001
    minDelta: float = 0.0001
    maxDelta: float = 0.1
    pMutW: float = 0.2
    pMut: float = 0.2
    pMutNewN: float = 0.2
    pMutD: float = 0.2
    pMutDelN: float = 0.2
    minW: float = -1.0
    maxW: float = 1.0
    hmBest: int = 5
    pRetrain: float = 0.2
    # run control
    generations: int = 30
    calls: int = 10
    seed: int = 0
    workers: int = 1
    data: str = ""
    # gradient trainer budget
    maxEpochs: int = 200
    lossTol: float = 1e-9
    dampingInit: float = 1e-3
    l2Strength: float = 1e-4
    # exhaustive grid
    gridNeurons: int = 3
    gridDu: tuple = (1, 5, 10)
    gridDy: tuple = (1, 5, 10)
    gridRepeats: int = 3
    trainer: str = "lm"
    # constant the penalties are subtracted from; shifts fitness, never the ranking
    baseline: float = 10.0

    @property
    def delays_pinned(self) -> bool:
        return self.algorithm == "dnas1"

    def validate(self) -> "NasConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.trainer not in TRAINERS:
            raise ConfigError(f"unknown trainer {self.trainer!r}; choose from {TRAINERS}")
        for name in ("pCross", "pMutW", "pMut", "pMutNewN", "pMutD", "pMutDelN", "pRetrain"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name}={p} is not a probability")
        if self.minDelta > self.maxDelta:
            raise ConfigError(f"minDelta={self.minDelta} exceeds maxDelta={self.maxDelta}")
        if self.minDelta < 0:
            raise ConfigError("minDelta must be non-negative")
        if self.minW > self.maxW:
            raise ConfigError(f"minW={self.minW} exceeds maxW={self.maxW}")
        for name in ("maxLay", "maxNinLay", "popSize", "hmBest", "calls", "maxEpochs",
                     "gridNeurons", "gridRepeats", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        for name in ("du", "dy", "duMax", "dyMax", "generations"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.hmBest > self.popSize:
            raise ConfigError(f"hmBest={self.hmBest} exceeds popSize={self.popSize}")
        if min(self.p1, self.p2, self.p3) < 0:
            raise ConfigError("fitness weights p1, p2, p3 must be non-negative")
        if self.delays_pinned and (self.du > self.duMax or self.dy > self.dyMax):
            raise ConfigError("pinned delays exceed duMax/dyMax")
        if not self.gridDu or not self.gridDy or min(*self.gridDu, *self.gridDy) < 0:
            raise ConfigError("exhaustive delay grids must be non-empty and non-negative")
        return self

    def replace(self, **changes) -> "NasConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(NasConfig)}


def coerce(key: str, raw: str):
    """Parse one textual value into the type of NasConfig field ``key``."""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    default = getattr(NasConfig, key, None)
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str, base: NasConfig | None = None) -> NasConfig:
    cfg = base or NasConfig()
    changes = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        changes[key.strip()] = coerce(key.strip(), value)
    return cfg.replace(**changes)


def load_config(path: str | Path, base: NasConfig | None = None) -> NasConfig:
    return parse_config_text(Path(path).read_text(), base)


# Per-algorithm default values.  Operators an
# algorithm does not use get probability 0.
_TABLE_DEFAULTS = {
    "dnas1": dict(pMutD=0.0, pMutDelN=0.0, pRetrain=0.0),
    "dnas2": dict(pMutDelN=0.0, pRetrain=0.0),
    "dnas3": dict(pRetrain=0.0),
    "dnas4": dict(pMutD=0.0, pMutDelN=0.0),
    "exhaustive": dict(),
}


def table_defaults(algorithm: str) -> NasConfig:
    if algorithm not in _TABLE_DEFAULTS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    return NasConfig(algorithm=algorithm, **_TABLE_DEFAULTS[algorithm])


# Full-scale experiment budgets.  These take hours; the desk defaults
# (10 calls x 30 generations) are what NasConfig ships with.
PRESETS = {
    "paper-dnas1": dict(algorithm="dnas1", calls=100, generations=100),
    "paper-dnas2": dict(algorithm="dnas2", calls=100, generations=100),
    "paper-dnas3": dict(algorithm="dnas3", calls=100, generations=100),
    "paper-dnas4": dict(algorithm="dnas4", calls=46, generations=25),
    "paper-exhaustive": dict(algorithm="exhaustive", gridNeurons=25,
                             gridDu=tuple(range(0, 51)), gridDy=tuple(range(0, 51)),
                             gridRepeats=10, trainer="lm"),
    "desk-dnas4": dict(algorithm="dnas4", calls=10, generations=10, popSize=20,
                       maxNinLay=3, duMax=10, dyMax=10, maxEpochs=60),
}


def preset(name: str) -> NasConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    spec = dict(PRESETS[name])
    return table_defaults(spec.pop("algorithm")).replace(**spec)
