"""Finite-volume density solver: conservation, known solutions, breakdown."""
import numpy as np
import pytest
from scipy.stats import norm

from rbmsim.errors import CFLViolation, OutOfRange
from rbmsim.fokker_planck import (
    DensityField,
    Grid1D,
    fp_solve,
    fp_step,
    grid_for,
    interpolate_ell,
    l1_distance,
    project_law,
)
from rbmsim.laws import DiracLaw, ExponentialLaw
from rbmsim.profiles import solve_c_alpha
from rbmsim.meanfield import jump_size  # noqa: F401  (import check: no cycle)


def test_grid_geometry():
    g = Grid1D(x_max=2.0, n_cells=4)
    assert g.h == 0.5
    assert g.centers().tolist() == [0.25, 0.75, 1.25, 1.75]
    assert g.edges().tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
    with pytest.raises(OutOfRange):
        Grid1D(x_max=1.0, n_cells=2)


def test_grid_for_covers_support():
    g = grid_for(ExponentialLaw(1.0), horizon=1.0, h=1e-3)
    assert g.x_max >= 10.0
    assert g.x_max == pytest.approx(g.n_cells * 1e-3)
    # Exp(1) upper 1 - 1e-9 quantile is about 20.7
    assert 26.0 < g.x_max < 28.0
    small = grid_for(DiracLaw(0.0), horizon=1.0, h=1e-2)
    assert small.x_max == pytest.approx(10.0, abs=1e-2)


def test_project_law_mass_and_placement():
    g = Grid1D(x_max=10.0, n_cells=100)
    f = project_law(ExponentialLaw(1.0), g)
    assert abs(f.mass() - 1.0) <= 1e-12
    d = project_law(DiracLaw(0.55), g)
    assert abs(d.mass() - 1.0) <= 1e-12
    j = int(np.argmax(d.values))
    assert g.edges()[j] <= 0.55 < g.edges()[j + 1]
    assert d.values[j] == pytest.approx(1.0 / g.h)


def test_single_step_conserves_mass():
    g = Grid1D(x_max=10.0, n_cells=500)
    f = project_law(ExponentialLaw(1.0), g)
    dt = 0.45 * min(g.h**2, g.h / (1.0 * f.boundary_value() / 2 + 1e-30))
    f2 = fp_step(f, alpha=1.0, dt_pde=dt)
    assert abs(f2.mass() - f.mass()) <= 1e-13
    assert f2.t == dt
    assert np.all(f2.values >= 0)


def test_step_rejects_large_dt():
    g = Grid1D(x_max=10.0, n_cells=500)
    f = project_law(ExponentialLaw(1.0), g)
    with pytest.raises(CFLViolation):
        fp_step(f, alpha=1.0, dt_pde=g.h**2)


def test_pure_diffusion_short_run():
    sol = fp_solve(ExponentialLaw(1.0), alpha=0.0, horizon=0.05, h=5e-3)
    assert sol.breakdown is None
    assert sol.mass_error_max <= 1e-12
    assert sol.clipped_total == 0.0
    assert np.all(np.diff(sol.record.ell) >= 0)
    assert sol.record.ell[0] == 0.0
    assert sol.record.ell[-1] > 0  # diffusion reaches the wall


def test_boundary_extrapolation_orders():
    g = Grid1D(x_max=1.0, n_cells=10)
    # linear density 2 - 2x has cell averages equal to center values
    f = DensityField(grid=g, values=2.0 - 2.0 * g.centers(), t=0.0)
    assert f.boundary_value(order=0) == pytest.approx(1.9)
    assert f.boundary_value(order=1) == pytest.approx(2.0)
    assert f.boundary_value(order=2) == pytest.approx(2.0)


@pytest.mark.slow
def test_reflected_heat_kernel():
    # alpha = 0 from a point mass at 1: exact solution by the method of
    # images is the folded Gaussian around the wall
    grid = Grid1D(x_max=6.0, n_cells=12000)  # h = 5e-4
    sol = fp_solve(DiracLaw(1.0), alpha=0.0, horizon=0.5, grid=grid)
    sigma = np.sqrt(0.5)

    class Folded:
        def cdf(self, x):
            x = np.asarray(x, dtype=float)
            return norm.cdf((x - 1) / sigma) + norm.cdf((x + 1) / sigma) - 1.0

    err = l1_distance(sol.snapshots[0.5], Folded())
    assert err <= 0.02
    assert sol.mass_error_max <= 1e-10


def test_stationary_exponential_coarse():
    # Exp(1) is invariant at alpha = 1 and the pushing grows like t/2
    sol = fp_solve(ExponentialLaw(1.0), alpha=1.0, horizon=1.0, h=2e-3,
                   snapshot_times=(0.5, 1.0))
    assert sol.breakdown is None
    assert l1_distance(sol.snapshots[1.0], ExponentialLaw(1.0)) <= 0.01
    assert abs(sol.record.ell[-1] - 0.5) <= 0.005
    assert abs(interpolate_ell(sol.record, 0.5) - 0.25) <= 0.005
    assert np.all(np.diff(sol.record.ell) >= 0)
    assert sol.mass_error_max <= 1e-10
    assert sol.tail_mass_max <= 1e-8


@pytest.mark.slow
def test_point_mass_start_sqrt_growth():
    # from a point mass at the wall the pushing follows c_alpha sqrt(t)
    c = solve_c_alpha(0.5)
    sol = fp_solve(DiracLaw(0.0), alpha=0.5, horizon=1.0, h=2e-3)
    ts = np.linspace(0.1, 1.0, 46)
    ell = interpolate_ell(sol.record, ts)
    rel = np.abs(ell - c * np.sqrt(ts)) / (c * np.sqrt(ts))
    assert sol.breakdown is None
    assert rel.max() <= 0.02


def test_consistency_order_under_refinement():
    # smooth data: halving h shrinks the L1 self-error by at least 1.7x
    ref_grid = Grid1D(x_max=10.0, n_cells=10_000)
    law = ExponentialLaw(1.0)
    fine = fp_solve(law, alpha=0.5, horizon=0.2, grid=ref_grid).final.values

    def err(n):
        sol = fp_solve(law, alpha=0.5, horizon=0.2,
                       grid=Grid1D(x_max=10.0, n_cells=n))
        ratio = 10_000 // n
        coarse_ref = fine.reshape(n, ratio).mean(axis=1)
        return (10.0 / n) * np.abs(sol.final.values - coarse_ref).sum()

    e_coarse, e_mid = err(2500), err(5000)
    assert e_coarse / e_mid >= 1.7


def test_breakdown_immediate_on_unresolvable_spike():
    sol = fp_solve(DiracLaw(0.0), alpha=1.0, horizon=1.0, h=1e-3)
    assert sol.breakdown is not None
    assert sol.breakdown.time == 0.0
    assert sol.n_steps == 0
    assert sol.breakdown.mu0 > sol.breakdown.threshold


def test_breakdown_supercritical_midrun():
    sol = fp_solve(ExponentialLaw(1.0), alpha=2.0, horizon=2.0, h=5e-3)
    assert sol.breakdown is not None
    assert 0.0 < sol.breakdown.time < 2.0
    assert sol.breakdown.mu0 > sol.breakdown.threshold
    # trace is reported up to the signal, not reconciled past it
    assert sol.record.times[-1] <= sol.breakdown.time + 1e-12


def test_quantile_adapter_against_law():
    from rbmsim.profiles import wasserstein1
    g = Grid1D(x_max=25.0, n_cells=12_500)
    f = project_law(ExponentialLaw(1.0), g)
    assert wasserstein1(f, ExponentialLaw(1.0)) <= 0.01
    u = np.linspace(0.01, 0.99, 50)
    q = f.quantile(u)
    assert np.all(np.diff(q) > 0)
    assert abs(float(f.quantile(0.5)) - np.log(2)) <= 2 * g.h
