"""Mean-field limit: the averaged pushing process and its solvers.

The unknown is the deterministic function ell(t) = E L_t solving the
self-consistency condition

    ell(t) = E [ sup_{s <= t} ( xi + W_s - alpha * ell(s) )_- ]

on a time grid. solve_picard iterates the right-hand side on a frozen
sample of M driving paths (common random numbers, streamed and regenerated
from the seed each sweep, so memory stays O(M)); solve_particle runs the
exchangeable N-particle system with coupling alpha/N instead. Both draw
initial points from stream 1 and noise from stream 0 of the same seed, so
with M = N they see identical randomness.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import BracketFailure, NoConvergence, OutOfRange, Unsupported
from .errors import AtomTooLarge
from .finite_system import SystemConfig, simulate
from .laws import DiracLaw, EmpiricalLaw, ExponentialLaw, Law
from .network import InteractionNetwork
from .noise import CovarianceSpec, TimeGrid, initial_rng, sample_noise


@dataclass(frozen=True)
class MeanFieldConfig:
    alpha: float
    initial_law: Law
    grid: TimeGrid
    n_samples: int
    seed: int
    picard_tol: float = 1e-10
    picard_max_iters: int = 200
    zero_threshold: Optional[float] = None

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise OutOfRange(f"alpha must be nonnegative, got {self.alpha}")
        if self.n_samples < 1:
            raise OutOfRange(f"n_samples must be >= 1, got {self.n_samples}")

    @property
    def eps0(self) -> float:
        if self.zero_threshold is not None:
            return self.zero_threshold
        return float(np.sqrt(self.grid.dt))


@dataclass(frozen=True)
class EllPath:
    """Averaged pushing on a grid; T_breakdown is +inf when none was detected."""

    times: np.ndarray
    ell: np.ndarray
    T_breakdown: float
    atom_mass: np.ndarray
    sweeps: int = 0
    gap: float = 0.0
    snapshots: Dict[float, np.ndarray] = field(default_factory=dict)


def _draw_initial(cfg: MeanFieldConfig) -> np.ndarray:
    return cfg.initial_law.sample(initial_rng(cfg.seed), cfg.n_samples)


def solve_picard(cfg: MeanFieldConfig, snapshot_times: Tuple[float, ...] = ()) -> EllPath:
    """Fixed-point iteration for ell on frozen noise.

    Supported for alpha <= 1; the map contracts at rate alpha on [0, T], and
    alpha = 1 is accepted with a warning since the sample functional still
    settles in practice.
    """
    if cfg.alpha > 1:
        raise Unsupported(
            f"picard iteration needs alpha <= 1 (got {cfg.alpha}); "
            "use solve_particle for the supercritical range"
        )
    if cfg.alpha == 1:
        warnings.warn("alpha = 1: contraction is not guaranteed", stacklevel=2)
    t_steps = cfg.grid.n_steps
    xi = _draw_initial(cfg)
    noise = sample_noise(cfg.grid, CovarianceSpec.identity(cfg.n_samples), cfg.seed)
    ell = np.zeros(t_steps + 1)
    prev = ell
    gap = np.inf
    sweeps_done = 0
    for sweep in range(1, cfg.picard_max_iters + 1):
        new_ell = np.empty(t_steps + 1)
        new_ell[0] = 0.0
        v = xi.copy()
        r = np.zeros(cfg.n_samples)
        k = 0
        for chunk in noise.iter_chunks():
            for row in chunk:
                v += row
                np.maximum(r, cfg.alpha * ell[k + 1] - v, out=r)
                new_ell[k + 1] = r.mean()
                k += 1
        gap = float(np.max(np.abs(new_ell - ell)))
        prev, ell = ell, new_ell
        sweeps_done = sweep
        if gap <= cfg.picard_tol:
            break
    else:
        raise NoConvergence(
            f"picard gap {gap:.3e} above tolerance {cfg.picard_tol:.3e} "
            f"after {cfg.picard_max_iters} sweeps",
            best=(prev, ell),
            gap=gap,
        )
    # final pass: atom mass P(X_t <= eps0) and optional sample snapshots
    atom = np.empty(t_steps + 1)
    snapshots: Dict[float, np.ndarray] = {}
    snap_left = sorted(snapshot_times)
    eps = cfg.eps0
    v = xi.copy()
    r = np.zeros(cfg.n_samples)
    x = v - cfg.alpha * ell[0] + r
    atom[0] = np.count_nonzero(x <= eps) / cfg.n_samples
    while snap_left and snap_left[0] <= cfg.grid.t0 + 1e-12:
        snapshots[snap_left.pop(0)] = x.copy()
    k = 0
    times = cfg.grid.times
    for chunk in noise.iter_chunks():
        for row in chunk:
            v += row
            drive = v - cfg.alpha * ell[k + 1]
            np.maximum(r, -drive, out=r)
            k += 1
            x = drive + r
            atom[k] = np.count_nonzero(x <= eps) / cfg.n_samples
            while snap_left and snap_left[0] <= times[k] + 1e-12:
                snapshots[snap_left.pop(0)] = x.copy()
    t_break = np.inf
    if cfg.alpha > 0:
        crossed = np.flatnonzero(cfg.alpha * atom >= 1.0 - 1e-9)
        if crossed.size:
            t_break = float(times[crossed[0]])
    return EllPath(
        times=times,
        ell=ell,
        T_breakdown=t_break,
        atom_mass=atom,
        sweeps=sweeps_done,
        gap=gap,
        snapshots=snapshots,
    )


def solve_particle(cfg: MeanFieldConfig, snapshot_times: Tuple[float, ...] = ()) -> EllPath:
    """Exchangeable N-particle approximation with coupling alpha/N.

    Breakdown (trigger ZeroCount) fires when the zero-set fraction reaches
    1/alpha, i.e. at least ceil(N/alpha) particles sit at the boundary.
    """
    n = cfg.n_samples
    xi = _draw_initial(cfg)
    net = InteractionNetwork.uniform(cfg.alpha, n)
    sys_cfg = SystemConfig(
        net=net,
        initial=xi,
        grid=cfg.grid,
        zero_threshold=cfg.zero_threshold,
        record_paths=False,
        snapshot_times=tuple(snapshot_times),
    )
    noise = sample_noise(cfg.grid, CovarianceSpec.identity(n), cfg.seed)
    traj = simulate(sys_cfg, noise)
    t_break = traj.breakdown.tau if traj.breakdown.occurred else np.inf
    return EllPath(
        times=traj.times,
        ell=traj.ell,
        T_breakdown=float(t_break),
        atom_mass=traj.zero_counts / n,
        snapshots=traj.snapshots,
    )


# -- instantaneous jump at time zero ------------------------------------------

@dataclass(frozen=True)
class JumpSolverResult:
    """Root of J(delta) = E (alpha - xi/delta)_+ = 1, or NoJump for alpha <= 1."""

    delta: Optional[float]
    status: str  # "Jump" | "NoJump"
    j_residual: float = 0.0
    iterations: int = 0


def _jump_functional(law: Law, alpha: float, delta: float) -> float:
    if isinstance(law, DiracLaw):
        return max(alpha - law.x0 / delta, 0.0)
    if isinstance(law, ExponentialLaw):
        r = law.rate
        return alpha - (-np.expm1(-r * alpha * delta)) / (r * delta)
    if isinstance(law, EmpiricalLaw):
        return float(np.maximum(alpha - law.values / delta, 0.0).mean())
    raise Unsupported(f"no jump functional for {type(law).__name__}")


def jump_size(law: Law, alpha: float) -> JumpSolverResult:
    """Initial jump of ell for a supercritical start.

    J is strictly increasing in delta with J(0+) = alpha * P(xi = 0) and
    J(inf) = alpha, so a root of J = 1 exists iff alpha > 1 and the zero
    atom is below 1/alpha.
    """
    if alpha < 0:
        raise OutOfRange(f"alpha must be nonnegative, got {alpha}")
    if alpha <= 1:
        return JumpSolverResult(delta=None, status="NoJump")
    atom = law.atom_at_zero
    if alpha * atom >= 1.0:
        raise AtomTooLarge(
            f"zero atom {atom} with alpha {alpha}: pushing cannot absorb the mass"
        )
    scale = law.mean() + 1.0
    lo, hi = 1e-12 * scale, 1e6 * scale
    f_lo = _jump_functional(law, alpha, lo) - 1.0
    f_hi = _jump_functional(law, alpha, hi) - 1.0
    if f_lo > 0 or f_hi < 0:
        raise BracketFailure(
            f"jump root not bracketed: J({lo:.3e})-1 = {f_lo:.3e}, "
            f"J({hi:.3e})-1 = {f_hi:.3e}"
        )
    mid = 0.5 * (lo + hi)
    f_mid = 0.0
    iters = 0
    for iters in range(1, 250):
        mid = 0.5 * (lo + hi)
        f_mid = _jump_functional(law, alpha, mid) - 1.0
        if abs(f_mid) <= 1e-10 or (hi - lo) <= 1e-16 * scale:
            break
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    if abs(f_mid) > 1e-10:
        raise BracketFailure(f"jump residual {abs(f_mid):.3e} above 1e-10")
    return JumpSolverResult(delta=float(mid), status="Jump",
                            j_residual=abs(f_mid), iterations=iters)


def breakdown_time(path: EllPath, alpha: float) -> float:
    """First grid time with alpha * P(X_t ~ 0) >= 1; +inf when never reached."""
    if alpha <= 0:
        return np.inf
    crossed = np.flatnonzero(alpha * path.atom_mass >= 1.0 - 1e-9)
    if crossed.size == 0:
        return np.inf
    return float(path.times[crossed[0]])


@dataclass(frozen=True)
class HolderDiagnostic:
    """Largest increment ratio over dyadic windows; finite for 1/2-Holder paths."""

    max_ratio: float
    window: Tuple[float, float]


def holder_diagnostic(path: EllPath) -> HolderDiagnostic:
    """max over dyadic windows of (ell(t2) - ell(t1)) / sqrt(t2 - t1)."""
    ell = path.ell
    n = ell.size - 1
    if n < 1:
        return HolderDiagnostic(0.0, (path.times[0], path.times[0]))
    dt = float(path.times[1] - path.times[0])
    best = -np.inf
    best_win = (0.0, 0.0)
    length = 1
    while length <= n:
        starts = np.arange(0, n - length + 1, length)
        gains = ell[starts + length] - ell[starts]
        ratios = gains / np.sqrt(length * dt)
        j = int(np.argmax(ratios))
        if ratios[j] > best:
            best = float(ratios[j])
            best_win = (float(path.times[starts[j]]), float(path.times[starts[j] + length]))
        length *= 2
    return HolderDiagnostic(max_ratio=best, window=best_win)
