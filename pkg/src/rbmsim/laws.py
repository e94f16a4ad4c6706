"""Initial distributions on the half line, shared by the solvers and the PDE."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ConfigError, EmptySample, OutOfRange


@dataclass(frozen=True)
class DiracLaw:
    """Point mass at x0 >= 0."""

    x0: float

    def __post_init__(self) -> None:
        if self.x0 < 0:
            raise OutOfRange(f"x0 must be >= 0, got {self.x0}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.x0))

    def mean(self) -> float:
        return float(self.x0)

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.x0)

    def cdf(self, x):
        return (np.asarray(x, dtype=float) >= self.x0).astype(float)

    @property
    def atom_at_zero(self) -> float:
        return 1.0 if self.x0 == 0.0 else 0.0


@dataclass(frozen=True)
class ExponentialLaw:
    """Exponential with the given rate (mean 1/rate)."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise OutOfRange(f"rate must be > 0, got {self.rate}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(scale=1.0 / self.rate, size=size)

    def mean(self) -> float:
        return 1.0 / self.rate

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        return -np.log1p(-u) / self.rate

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    @property
    def atom_at_zero(self) -> float:
        return 0.0


@dataclass(frozen=True)
class EmpiricalLaw:
    """Law of a finite sample; values are kept sorted."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise EmptySample("empirical law needs a nonempty 1-d sample")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample must be finite")
        object.__setattr__(self, "values", np.sort(v))

    @classmethod
    def from_samples(cls, values) -> "EmpiricalLaw":
        return cls(values=np.asarray(values, dtype=float))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "EmpiricalLaw":
        """Single-column CSV with header 'x'."""
        path = Path(path)
        lines = path.read_text().splitlines()
        if not lines or lines[0].strip() != "x":
            raise ConfigError(f"{path}: expected a single-column CSV with header 'x'")
        try:
            vals = np.array([float(s) for s in lines[1:] if s.strip()])
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls(values=vals)

    @property
    def n(self) -> int:
        return self.values.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.values[rng.integers(0, self.n, size=size)]

    def mean(self) -> float:
        return float(self.values.mean())

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.ceil(u * self.n).astype(int) - 1, 0, self.n - 1)
        return self.values[idx]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.values, x, side="right") / self.n

    @property
    def atom_at_zero(self) -> float:
        return float(np.count_nonzero(self.values == 0.0)) / self.n


Law = Union[DiracLaw, ExponentialLaw, EmpiricalLaw]


def parse_law(spec: dict) -> Law:
    """Build a law from a config table like {kind = "exponential", rate = 1.0}."""
    if not isinstance(spec, dict):
        raise ConfigError(f"initial_law must be a table, got {type(spec).__name__}")
    kind = spec.get("kind")
    known = {
        "dirac": ({"kind", "x0"}, lambda: DiracLaw(x0=float(spec.get("x0", 0.0)))),
        "exponential": ({"kind", "rate"}, lambda: ExponentialLaw(rate=float(spec.get("rate", 1.0)))),
        "empirical": ({"kind", "path"}, lambda: EmpiricalLaw.from_file(spec["path"])),
    }
    if kind not in known:
        raise ConfigError(
            f"initial_law.kind must be one of {sorted(known)}, got {kind!r}"
        )
    allowed, build = known[kind]
    extra = set(spec) - allowed
    if extra:
        raise ConfigError(f"unknown initial_law keys: {sorted(extra)}")
    if kind == "empirical" and "path" not in spec:
        raise ConfigError("initial_law.kind = 'empirical' requires a path")
    return build()
