"""Finite-volume solver for the nonlinear boundary-coupled heat equation.

The density mu_t on [0, x_max] evolves by diffusion (1/2) d2/dx2 plus
advection with the spatially constant velocity v(t) = -alpha * mu_t(0) / 2
pointing at the origin, with zero total flux through both ends.  The
accumulated pushing is recovered from the boundary trace,
ell(t) = (1/2) * integral of mu_s(0) ds, which is what the probabilistic
solvers estimate by Monte Carlo.  This module exists as an independent
cross-check of those solvers, not as the primary engine, so the scheme is
deliberately plain: explicit first-order upwind advection, centered
diffusion, conservative flux form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .errors import CFLViolation, MassLoss, OutOfRange
from .laws import Law

_CFL_SAFETY = 0.45
_TAIL_BUDGET = 1e-8
_CLIP_LOG_THRESHOLD = 1e-12
_CLIP_BUDGET = 1e-6

# one-sided extrapolation of the boundary value from the first cell averages,
# treating averages as center values; weights sum to 1
_EXTRAP_WEIGHTS = {
    0: (1.0,),
    1: (1.5, -0.5),
    2: (15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0),
}


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell grid on [0, x_max] with centers at (j + 1/2) h."""

    x_max: float
    n_cells: int

    def __post_init__(self) -> None:
        if not (self.x_max > 0 and self.n_cells >= 3):
            raise OutOfRange(
                f"need x_max > 0 and n_cells >= 3, got {self.x_max}, {self.n_cells}"
            )

    @property
    def h(self) -> float:
        return self.x_max / self.n_cells

    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h


def grid_for(law: Law, horizon: float, h: float) -> Grid1D:
    """Grid whose cutoff covers the initial support plus diffusive spread.

    x_max = max(10, 6 sqrt(horizon) + initial upper quantile), rounded up to
    a whole number of cells so the requested cell width is exact.
    """
    hi = float(np.asarray(law.quantile(np.asarray(1.0 - 1e-9))))
    x_max = max(10.0, 6.0 * np.sqrt(horizon) + hi)
    n = int(np.ceil(x_max / h))
    return Grid1D(x_max=n * h, n_cells=n)


@dataclass
class DensityField:
    """Cell-averaged density at a fixed time; unit mass up to roundoff."""

    grid: Grid1D
    values: np.ndarray
    t: float = 0.0

    def mass(self) -> float:
        return float(self.grid.h * self.values.sum())

    def boundary_value(self, order: int = 2) -> float:
        w = _EXTRAP_WEIGHTS[order]
        v = float(np.dot(w, self.values[: len(w)]))
        return max(v, 0.0)

    def cdf_at_edges(self) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(self.values) * self.grid.h])
        return c

    def quantile(self, u) -> np.ndarray:
        """Inverse of the piecewise-linear CDF induced by the cell averages."""
        u = np.asarray(u, dtype=float)
        c = self.cdf_at_edges()
        total = c[-1]
        target = np.clip(u, 0.0, 1.0) * total
        idx = np.clip(np.searchsorted(c, target, side="right") - 1, 0, self.grid.n_cells - 1)
        dens = self.values[idx]
        frac = np.where(dens > 0, (target - c[idx]) / np.maximum(dens * self.grid.h, 1e-300), 0.0)
        return (idx + np.clip(frac, 0.0, 1.0)) * self.grid.h

    def copy(self) -> "DensityField":
        return DensityField(grid=self.grid, values=self.values.copy(), t=self.t)


def project_law(law: Law, grid: Grid1D) -> DensityField:
    """Cell averages from exact CDF differences, renormalized to unit mass."""
    edges = grid.edges()
    cdf = np.asarray(law.cdf(edges), dtype=float)
    cdf[0] = 0.0  # an atom exactly at the wall belongs to the first cell
    masses = np.diff(cdf)
    total = masses.sum()
    if total <= 0:
        raise OutOfRange("initial law has no mass inside the grid")
    return DensityField(grid=grid, values=masses / (total * grid.h), t=0.0)


@dataclass(frozen=True)
class FluxRecord:
    """Boundary trace and its accumulated half-integral along the run."""

    times: np.ndarray
    mu0: np.ndarray
    ell: np.ndarray


@dataclass(frozen=True)
class BreakdownSignal:
    """Boundary value exceeded what the grid can resolve: 1 / (alpha h)."""

    time: float
    mu0: float
    threshold: float


@dataclass(frozen=True)
class FPSolution:
    final: DensityField
    record: FluxRecord
    snapshots: Dict[float, DensityField]
    breakdown: Optional[BreakdownSignal]
    clipped_total: float
    mass_error_max: float
    tail_mass_max: float
    n_steps: int


def _cfl_dt(h: float, alpha: float, mu0: float) -> float:
    return _CFL_SAFETY * min(h * h, h / (alpha * mu0 / 2.0 + 1e-30))


def _step_values(values: np.ndarray, h: float, v: float, dt: float,
                 flux: np.ndarray, work: np.ndarray, div: np.ndarray) -> float:
    """One conservative update in place; returns the clipped mass fraction.

    flux has n+1 slots with flux[0] == flux[n] == 0 fixed; interior face i
    (between cells i-1 and i) carries v*mu_i - (mu_i - mu_{i-1}) / (2h),
    the advective part taking the right cell because v <= 0.
    """
    n = values.shape[0]
    inner = flux[1:n]
    if v != 0.0:
        np.multiply(values[1:], v, out=inner)
    else:
        inner[:] = 0.0
    np.subtract(values[1:], values[:-1], out=work)
    work *= 1.0 / (2.0 * h)
    inner -= work
    np.subtract(flux[1:], flux[:-1], out=div)
    div *= dt / h
    values -= div
    if values.min() >= 0.0:
        return 0.0
    removed = -float(values[values < 0.0].sum())
    np.maximum(values, 0.0, out=values)
    total = float(values.sum())
    rel = removed / total
    if rel > _CLIP_LOG_THRESHOLD:
        values *= (1.0 / h) / total
        return rel
    return 0.0


def fp_step(field: DensityField, alpha: float, dt_pde: float,
            boundary_order: int = 2) -> DensityField:
    """Single explicit update; dt_pde must satisfy the stability bound."""
    h = field.grid.h
    mu0 = field.boundary_value(boundary_order)
    limit = _cfl_dt(h, alpha, mu0)
    if dt_pde > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt {dt_pde:.3e} exceeds stability bound {limit:.3e}")
    n = field.grid.n_cells
    flux = np.zeros(n + 1)
    work = np.empty(n - 1)
    div = np.empty(n)
    values = field.values.copy()
    clipped = _step_values(values, h, -0.5 * alpha * mu0, dt_pde, flux, work, div)
    if clipped > _CLIP_BUDGET:
        raise MassLoss(f"clipped {clipped:.3e} of mass in a single step")
    return DensityField(grid=field.grid, values=values, t=field.t + dt_pde)


def fp_solve(
    initial: Union[Law, DensityField],
    alpha: float,
    horizon: float,
    grid: Optional[Grid1D] = None,
    *,
    h: float = 1e-3,
    snapshot_times: Tuple[float, ...] = (),
    boundary_order: int = 2,
    record_points: int = 2048,
) -> FPSolution:
    """March the density to the horizon, tracking the boundary trace.

    The step size follows the stability bound and shrinks to land exactly on
    snapshot times and the horizon.  Stops early with a BreakdownSignal when
    the extrapolated boundary value exceeds 1 / (alpha h).
    """
    if alpha < 0:
        raise OutOfRange(f"alpha must be nonnegative, got {alpha}")
    if horizon <= 0:
        raise OutOfRange(f"horizon must be positive, got {horizon}")
    if isinstance(initial, DensityField):
        fld = initial.copy()
        grid = fld.grid
    else:
        if grid is None:
            grid = grid_for(initial, horizon, h)
        fld = project_law(initial, grid)
    hh = grid.h
    n = grid.n_cells
    values = fld.values
    threshold = np.inf if alpha == 0 else 1.0 / (alpha * hh)

    landings = sorted({float(s) for s in snapshot_times if 0.0 < s <= horizon} | {horizon})
    record_dt = horizon / max(record_points, 1)

    flux = np.zeros(n + 1)
    work = np.empty(n - 1)
    div = np.empty(n)

    t = 0.0
    ell = 0.0
    mu0 = float(np.dot(_EXTRAP_WEIGHTS[boundary_order],
                       values[: boundary_order + 1])) if values.size else 0.0
    mu0 = max(mu0, 0.0)
    times_log = [0.0]
    mu0_log = [mu0]
    ell_log = [0.0]
    last_logged = 0.0
    snapshots: Dict[float, DensityField] = {}
    breakdown: Optional[BreakdownSignal] = None
    clipped_total = 0.0
    mass_err = abs(hh * values.sum() - 1.0)
    tail_max = float(values[-1] * hh)
    steps = 0
    w_b = _EXTRAP_WEIGHTS[boundary_order]
    land_idx = 0

    while land_idx < len(landings):
        if mu0 > threshold:
            breakdown = BreakdownSignal(time=t, mu0=mu0, threshold=threshold)
            break
        dt = _cfl_dt(hh, alpha, mu0)
        target = landings[land_idx]
        if t + dt >= target - 1e-15:
            dt = target - t
        clipped = _step_values(values, hh, -0.5 * alpha * mu0, dt, flux, work, div)
        clipped_total += clipped
        if clipped_total > _CLIP_BUDGET:
            raise MassLoss(
                f"cumulative clipped mass {clipped_total:.3e} exceeds {_CLIP_BUDGET:.0e}"
            )
        steps += 1
        mu0_new = max(float(np.dot(w_b, values[: len(w_b)])), 0.0)
        ell += 0.25 * (mu0 + mu0_new) * dt
        mu0 = mu0_new
        t = t + dt if t + dt < target else target
        if t == target:
            land_idx += 1
            snapshots[target] = DensityField(grid=grid, values=values.copy(), t=t)
        if t - last_logged >= record_dt or t == target:
            times_log.append(t)
            mu0_log.append(mu0)
            ell_log.append(ell)
            last_logged = t
            mass_err = max(mass_err, abs(hh * float(values.sum()) - 1.0))
            tail_max = max(tail_max, float(values[-1] * hh))

    record = FluxRecord(times=np.asarray(times_log), mu0=np.asarray(mu0_log),
                        ell=np.asarray(ell_log))
    final = DensityField(grid=grid, values=values, t=t)
    return FPSolution(
        final=final,
        record=record,
        snapshots=snapshots,
        breakdown=breakdown,
        clipped_total=clipped_total,
        mass_error_max=mass_err,
        tail_mass_max=tail_max,
        n_steps=steps,
    )


def l1_distance(field: DensityField, law: Law) -> float:
    """L1 gap between the cell averages and the law's exact cell averages."""
    ref = project_law(law, field.grid)
    return float(field.grid.h * np.abs(field.values - ref.values).sum())


def interpolate_ell(record: FluxRecord, t) -> np.ndarray:
    return np.interp(np.asarray(t, dtype=float), record.times, record.ell)
