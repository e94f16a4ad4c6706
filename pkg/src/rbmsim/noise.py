"""Uniform time grids, covariance factorization, and reproducible Brownian increments.

Increments are generated in fixed-size row chunks (a pure function of the
column count), so streaming consumers and the materialized array see
bit-identical values for the same (grid, covariance, seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import NotPositiveSemidefinite, NotSymmetric, OutOfRange

# Target chunk size in elements; rows per chunk depend only on N.
_CHUNK_ELEMS = 1 << 22

_SYM_TOL = 1e-12
_PSD_TOL = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = t0 + k*dt, k = 0..n_steps."""

    t0: float
    dt: float
    n_steps: int

    def __post_init__(self) -> None:
        if self.t0 < 0:
            raise OutOfRange(f"t0 must be >= 0, got {self.t0}")
        if not self.dt > 0:
            raise OutOfRange(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise OutOfRange(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    @property
    def horizon(self) -> float:
        return self.t0 + self.dt * self.n_steps


@dataclass(frozen=True)
class CovarianceSpec:
    """Per-unit-time covariance of the driving noise.

    ``matrix is None`` encodes the N-dimensional identity without storing it,
    which keeps large exchangeable systems tractable.
    """

    n: int
    matrix: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise OutOfRange(f"dimension must be >= 1, got {self.n}")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.n, self.n):
                raise OutOfRange(f"covariance shape {m.shape} != ({self.n}, {self.n})")
            object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, n: int) -> "CovarianceSpec":
        return cls(n=n, matrix=None)

    @property
    def is_identity(self) -> bool:
        return self.matrix is None

    def dense(self) -> np.ndarray:
        if self.matrix is None:
            return np.eye(self.n)
        return self.matrix

    def diagonal(self) -> np.ndarray:
        if self.matrix is None:
            return np.ones(self.n)
        return np.diag(self.matrix).copy()


def factor_covariance(a: CovarianceSpec) -> Optional[np.ndarray]:
    """Return F with F @ F.T == A (within tolerance), or None for the identity.

    Symmetric eigendecomposition with eigenvalues in [-tol, tol]*scale clamped
    to zero, so rank-deficient inputs produce a factor of matching rank.
    """
    if a.is_identity:
        return None
    m = a.matrix
    scale = float(np.linalg.norm(m, np.inf))
    if scale == 0.0:
        return np.zeros_like(m)
    asym = float(np.linalg.norm(m - m.T, np.inf))
    if asym > _SYM_TOL * scale:
        raise NotSymmetric(
            f"covariance asymmetry {asym:.3e} exceeds {_SYM_TOL * scale:.3e}"
        )
    w, v = np.linalg.eigh(m)
    floor = -_PSD_TOL * scale
    if w.min() < floor:
        raise NotPositiveSemidefinite(
            f"eigenvalue {w.min():.6e} below tolerance {floor:.3e}"
        )
    w = np.where(np.abs(w) <= _PSD_TOL * scale, 0.0, w)
    return v * np.sqrt(w)


def _chunk_rows(n: int) -> int:
    return max(1, _CHUNK_ELEMS // max(1, n))


@dataclass(frozen=True)
class NoiseEnsemble:
    """Correlated Brownian increments on a grid, reproducible from (seed, stream).

    Rows are steps, columns are particles/samples. ``increments`` materializes
    the full [n_steps x n] array; ``iter_chunks`` streams the same values in
    row blocks without holding more than one block.
    """

    grid: TimeGrid
    cov: CovarianceSpec
    seed: int
    stream: int = 0
    factor: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "factor", factor_covariance(self.cov))

    @property
    def n(self) -> int:
        return self.cov.n

    def _rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.default_rng(ss)

    def iter_chunks(self) -> Iterator[np.ndarray]:
        """Yield [rows x n] increment blocks covering all n_steps rows in order."""
        rng = self._rng()
        sqrt_dt = np.sqrt(self.grid.dt)
        rows_per = _chunk_rows(self.n)
        remaining = self.grid.n_steps
        while remaining > 0:
            rows = min(rows_per, remaining)
            z = rng.standard_normal((rows, self.n))
            if self.factor is None:
                yield z * sqrt_dt
            else:
                yield (z @ self.factor.T) * sqrt_dt
            remaining -= rows

    @property
    def increments(self) -> np.ndarray:
        return np.concatenate(list(self.iter_chunks()), axis=0)


def sample_noise(grid: TimeGrid, a: CovarianceSpec, seed: int, stream: int = 0) -> NoiseEnsemble:
    """Build the increment ensemble for (grid, A, seed); deterministic."""
    return NoiseEnsemble(grid=grid, cov=a, seed=seed, stream=stream)


def initial_rng(seed: int) -> np.random.Generator:
    """Generator for initial-condition draws; stream 1 of the run seed.

    Stream 0 is reserved for the Brownian increments so initial draws and
    noise never share bits.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
