"""Covariance factorization and reproducible increment generation."""
import numpy as np
import pytest

from rbmsim.errors import NotPositiveSemidefinite, NotSymmetric, OutOfRange
from rbmsim.noise import (
    CovarianceSpec,
    NoiseEnsemble,
    TimeGrid,
    factor_covariance,
    sample_noise,
)


def test_grid_validation():
    with pytest.raises(OutOfRange):
        TimeGrid(t0=-1.0, dt=0.1, n_steps=5)
    with pytest.raises(OutOfRange):
        TimeGrid(t0=0.0, dt=0.0, n_steps=5)
    with pytest.raises(OutOfRange):
        TimeGrid(t0=0.0, dt=0.1, n_steps=0)
    g = TimeGrid(t0=0.5, dt=0.25, n_steps=4)
    assert np.allclose(g.times, [0.5, 0.75, 1.0, 1.25, 1.5])
    assert g.horizon == 1.5


def test_identity_factor_is_implicit():
    spec = CovarianceSpec.identity(1000)
    assert factor_covariance(spec) is None
    assert spec.diagonal().tolist() == [1.0] * 1000


def test_factor_reproduces_dense_covariance():
    rng = np.random.default_rng(11)
    g = rng.normal(0, 1, (6, 6))
    a = g @ g.T
    spec = CovarianceSpec(n=6, matrix=a)
    f = factor_covariance(spec)
    scale = np.linalg.norm(a, np.inf)
    assert np.max(np.abs(f @ f.T - a)) <= 1e-8 * scale
    assert np.linalg.matrix_rank(f) == np.linalg.matrix_rank(a)


def test_factor_rank_deficient():
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    f = factor_covariance(CovarianceSpec(n=2, matrix=a))
    assert np.max(np.abs(f @ f.T - a)) <= 1e-8 * 2
    assert np.linalg.matrix_rank(f) == 1


def test_factor_rejects_asymmetric():
    a = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NotSymmetric):
        factor_covariance(CovarianceSpec(n=2, matrix=a))


def test_factor_rejects_indefinite():
    a = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveSemidefinite):
        factor_covariance(CovarianceSpec(n=2, matrix=a))


def test_increments_deterministic_and_chunk_stable():
    grid = TimeGrid(0.0, 0.01, 537)
    ens1 = sample_noise(grid, CovarianceSpec.identity(7), seed=42)
    ens2 = sample_noise(grid, CovarianceSpec.identity(7), seed=42)
    full = ens1.increments
    assert full.shape == (537, 7)
    streamed = np.concatenate(list(ens2.iter_chunks()), axis=0)
    assert np.array_equal(full, streamed)
    assert np.array_equal(full, sample_noise(grid, CovarianceSpec.identity(7), seed=42).increments)


def test_distinct_seeds_and_streams_differ():
    grid = TimeGrid(0.0, 0.01, 16)
    spec = CovarianceSpec.identity(3)
    a = sample_noise(grid, spec, seed=1).increments
    b = sample_noise(grid, spec, seed=2).increments
    c = sample_noise(grid, spec, seed=1, stream=1).increments
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_anticorrelated_increments_cancel_exactly():
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    grid = TimeGrid(0.0, 0.05, 400)
    ens = NoiseEnsemble(grid=grid, cov=CovarianceSpec(n=2, matrix=a), seed=9)
    inc = ens.increments
    assert np.all(inc[:, 0] + inc[:, 1] == 0.0)


def test_increment_variance_near_dt():
    grid = TimeGrid(0.0, 0.02, 100_000)
    ens = sample_noise(grid, CovarianceSpec.identity(2), seed=101)
    inc = ens.increments
    ratios = inc.var(axis=0) / grid.dt
    assert np.all(ratios >= 0.97) and np.all(ratios <= 1.03)


def test_correlated_variance_matches_diagonal():
    a = np.array([[2.0, 0.3], [0.3, 0.5]])
    grid = TimeGrid(0.0, 0.01, 100_000)
    ens = sample_noise(grid, CovarianceSpec(n=2, matrix=a), seed=55)
    inc = ens.increments
    ratios = inc.var(axis=0) / (np.diag(a) * grid.dt)
    assert np.all(ratios >= 0.97) and np.all(ratios <= 1.03)
    corr = np.corrcoef(inc.T)[0, 1]
    assert abs(corr - 0.3 / np.sqrt(2.0 * 0.5)) < 0.02
