"""Finite systems of reflected particles coupled through boundary pushing.

Each Euler step solves for the vector of pushing increments, the least
nonnegative fixed point of

    dl_i = ( x_i + dw_i - sum_j q_ij dl_j )_-

by monotone iteration from zero, then tries to polish the detected support
with an exact linear solve. The iteration diverging (sup norm doubling
across half the iteration budget) certifies that no fixed point exists,
which is one of the breakdown triggers; the other is the spectral radius
of the active zero-set minor reaching one.

The uniform network q_ij = alpha/n reduces to a scalar fixed point for the
mean push m = mean(dl) via the convex map g(m) = mean((alpha m - b)_+),
solved identically for one system or a batch of replicas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    NegativeStart,
    NoConvergence,
    NonFiniteNoise,
    PreconditionViolated,
)
from .network import InteractionNetwork, active_nodes, spectral_radius
from .noise import NoiseEnsemble, TimeGrid

_RHO_MARGIN = 1e-9

TRIGGER_SPECTRAL = "SpectralRadius"
TRIGGER_DIVERGENCE = "IterationDivergence"
TRIGGER_ZERO_COUNT = "ZeroCount"


@dataclass(frozen=True)
class SystemConfig:
    """Simulation setup for one finite system.

    zero_threshold defaults to sqrt(dt): a particle within one noise
    standard deviation of the boundary counts as being at zero.
    fp_tolerance defaults to 1e-12 * max(1, |X|_inf), recomputed per step.
    """

    net: InteractionNetwork
    initial: np.ndarray
    grid: TimeGrid
    zero_threshold: Optional[float] = None
    fp_tolerance: Optional[float] = None
    fp_max_iters: Optional[int] = None
    rho_margin: float = _RHO_MARGIN
    record_paths: bool = True
    snapshot_times: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        xi = np.asarray(self.initial, dtype=float)
        if xi.shape != (self.net.n,):
            raise DimensionMismatch(
                f"initial shape {xi.shape} does not match n = {self.net.n}"
            )
        if not np.all(np.isfinite(xi)):
            raise ValueError("initial condition must be finite")
        if np.any(xi < 0):
            raise NegativeStart("initial condition must be nonnegative")
        object.__setattr__(self, "initial", xi)

    @property
    def eps0(self) -> float:
        if self.zero_threshold is not None:
            return self.zero_threshold
        return float(np.sqrt(self.grid.dt))

    @property
    def max_iters(self) -> int:
        if self.fp_max_iters is not None:
            return self.fp_max_iters
        return 10 * self.net.n + 100

    def step_tolerance(self, x: np.ndarray) -> float:
        if self.fp_tolerance is not None:
            return self.fp_tolerance
        return 1e-12 * max(1.0, float(np.max(np.abs(x), initial=0.0)))


@dataclass(frozen=True)
class BreakdownEvent:
    """First time the system cannot continue, with the reason."""

    occurred: bool
    tau: Optional[float] = None
    trigger: Optional[str] = None
    zero_set_at_tau: Tuple[int, ...] = ()
    rho_at_tau: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "occurred": self.occurred,
            "tau": self.tau,
            "trigger": self.trigger,
            "zero_set": list(self.zero_set_at_tau),
            "rho": self.rho_at_tau,
        }


NO_BREAKDOWN = BreakdownEvent(occurred=False)


# -- dense fixed point ------------------------------------------------------

def _polish_dense(b: np.ndarray, q: np.ndarray, dl: np.ndarray, tol: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Exact solve on the support seen so far; None when the guess is refuted.

    The monotone iterate sits below the least fixed point, so its support is
    a subset of the true one; a wrong guess shows up as a negative particle
    off support or a negative push on it.
    """
    support = dl > 0
    if not support.any():
        if np.all(b >= -tol):
            return np.zeros_like(b), np.maximum(b, 0.0)
        return None
    s = np.flatnonzero(support)
    mat = np.eye(s.size) - q[np.ix_(s, s)]
    try:
        sol = np.linalg.solve(mat, -b[s])
    except np.linalg.LinAlgError:
        return None
    if np.any(sol < 0):
        return None
    out = np.zeros_like(b)
    out[s] = sol
    x_new = b - q @ out
    x_new[s] = 0.0
    if np.any(x_new < -tol):
        return None
    return out, x_new


def _lfp_dense(
    b: np.ndarray, q: np.ndarray, tol: float, max_iters: int
) -> Tuple[Optional[np.ndarray], Optional[np.ndarray], bool]:
    """Least fixed point of the pushing map; (dl, x_new, diverged)."""
    dl = np.zeros_like(b)
    sup_hist = [0.0]
    half = max(1, max_iters // 2)
    gap = np.inf
    for it in range(1, max_iters + 1):
        dl_new = np.maximum(-(b - q @ dl), 0.0)
        gap = float(np.max(np.abs(dl_new - dl)))
        dl = dl_new
        sup = float(dl.max(initial=0.0))
        sup_hist.append(sup)
        if it >= half and sup_hist[it - half] > 0 and sup >= 2.0 * sup_hist[it - half]:
            return None, None, True
        if gap <= tol or it % 25 == 0 or it == max_iters:
            polished = _polish_dense(b, q, dl, tol)
            if polished is not None:
                return polished[0], polished[1], False
            if gap <= tol:
                x_new = b - q @ dl
                x_new[dl > 0] = 0.0
                return dl, x_new, False
    raise NoConvergence(
        f"pushing fixed point unresolved after {max_iters} iterations",
        best=dl, gap=gap,
    )


# -- uniform scalar fixed point ---------------------------------------------

# Sweeps of the plain iteration before switching stalled rows to the exact
# breakpoint solve. Near criticality the contraction rate approaches one and
# plain iteration stalls; the exact solve has no such hazard.
_EXACT_AFTER = 40


def _uniform_exact(b: np.ndarray, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exact least root of m = mean((alpha m - b)_+), row by row.

    The map is convex piecewise linear with breakpoints at the sorted entries
    of b / alpha; on the segment where the k smallest entries are pushed the
    root is -(their sum) / (n - alpha k). Scanning k upward and taking the
    first self-consistent candidate yields the least fixed point; rows with
    no consistent candidate have no root at all (the map stays above the
    diagonal) and are reported as diverged.
    """
    r, n = b.shape
    s = np.sort(b, axis=1)
    prefix = np.concatenate([np.zeros((r, 1)), np.cumsum(s, axis=1)], axis=1)
    denom = n - alpha * np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = -prefix / denom
    cand[:, 0] = 0.0
    push = alpha * cand
    atol = 1e-12 * np.maximum(1.0, np.abs(s[:, [0, -1]]).max(axis=1))[:, None]
    # candidate k is consistent when the k-th smallest entry is pushed and
    # the (k+1)-th is not
    lower = np.ones((r, n + 1), dtype=bool)
    lower[:, 1:] = push[:, 1:] >= s - atol
    upper = np.ones((r, n + 1), dtype=bool)
    upper[:, :-1] = push[:, :-1] <= s + atol
    valid = (denom > 0)[None, :] & (cand >= -atol) & lower & upper
    has_root = valid.any(axis=1)
    first = np.argmax(valid, axis=1)
    m = np.where(has_root, cand[np.arange(r), first], 0.0)
    return np.maximum(m, 0.0), ~has_root


def _blocking_count(b_row: np.ndarray, alpha: float) -> int:
    """Size of the zero set pinned by the failing step: the smallest set of
    entries whose pushed fraction already reaches one, ties included."""
    n = b_row.size
    k0 = int(np.ceil(n / alpha - 1e-12))
    k0 = min(max(k0, 1), n)
    s = np.sort(b_row)
    return int(np.searchsorted(s, s[k0 - 1], side="right"))


def _lfp_uniform_batch(
    b: np.ndarray, alpha: float, tol_m: np.ndarray, max_iters: int,
    active: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Scalar fixed point m = mean((alpha m - b)_+) per replica row of b.

    Returns (m, diverged). Rows start at m = 0 and increase monotonically;
    a row is divergent when the map still moves up but its one-sided slope
    alpha * (pushed fraction) has reached one, which by convexity rules out
    any root. Converged rows freeze so a batch replays solo runs bit for bit;
    rows still open after a bounded number of sweeps (contraction rate near
    one) are finished by the exact breakpoint solve instead.
    """
    r, n = b.shape
    m = np.zeros(r)
    diverged = np.zeros(r, dtype=bool)
    if alpha == 0.0:
        return m, diverged
    open_rows = np.ones(r, dtype=bool) if active is None else active.copy()
    for _ in range(min(max_iters, _EXACT_AFTER)):
        if not open_rows.any():
            break
        push = alpha * m[open_rows, None] - b[open_rows]
        pos = push > 0
        g = np.where(pos, push, 0.0).mean(axis=1)
        moved = g - m[open_rows]
        slope = alpha * pos.sum(axis=1) / n
        div_now = (moved > 0) & (slope >= 1.0)
        conv_now = moved <= tol_m[open_rows]
        m[open_rows] = g
        idx = np.flatnonzero(open_rows)
        diverged[idx[div_now]] = True
        open_rows[idx[div_now | conv_now]] = False
    if open_rows.any():
        m_exact, no_root = _uniform_exact(b[open_rows], alpha)
        idx = np.flatnonzero(open_rows)
        m[idx] = m_exact
        diverged[idx[no_root]] = True
    # exact polish: solve on the pushed set implied by the converged m
    ok = ~diverged
    if ok.any():
        pushed = alpha * m[ok, None] - b[ok] > 0
        k = pushed.sum(axis=1)
        denom = 1.0 - alpha * k / n
        ssum = np.where(pushed, b[ok], 0.0).sum(axis=1)
        safe = denom > 0
        m_star = np.where(safe, -(ssum / n) / np.where(safe, denom, 1.0), m[ok])
        # accept only when the pushed set is self-consistent at m_star
        pushed_star = alpha * m_star[:, None] - b[ok] > 0
        good = safe & (m_star >= 0) & np.all(pushed_star == pushed, axis=1)
        m[np.flatnonzero(ok)[good]] = m_star[good]
    return m, diverged


def _uniform_apply(b: np.ndarray, alpha: float, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """New state and pushes from the solved mean; complementarity is exact."""
    u = b - alpha * m[:, None]
    return np.maximum(u, 0.0), np.maximum(-u, 0.0)


# -- single-system stepping ---------------------------------------------------

@dataclass(frozen=True)
class SystemState:
    k: int
    t: float
    x: np.ndarray
    l: np.ndarray


@dataclass(frozen=True)
class StepResult:
    state: Optional[SystemState]
    breakdown: Optional[BreakdownEvent]
    delta_l: Optional[np.ndarray] = None


def step(state: SystemState, dw: np.ndarray, cfg: SystemConfig) -> StepResult:
    """Advance one Euler step; breakdown reported at the step's left endpoint."""
    dw = np.asarray(dw, dtype=float)
    if dw.shape != state.x.shape:
        raise DimensionMismatch(f"increment shape {dw.shape} != state shape {state.x.shape}")
    if not np.all(np.isfinite(dw)):
        raise NonFiniteNoise("noise increment contains non-finite values")
    b = state.x + dw
    tol = cfg.step_tolerance(state.x)
    net = cfg.net
    if net.is_uniform:
        m, diverged = _lfp_uniform_batch(
            b[None, :], net.alpha, np.array([tol / max(net.alpha, 1.0)]), cfg.max_iters
        )
        if diverged[0]:
            return StepResult(None, _divergence_event(state, cfg))
        x_rows, dl_rows = _uniform_apply(b[None, :], net.alpha, m)
        x_new, dl = x_rows[0], dl_rows[0]
    else:
        dl, x_new, diverged = _lfp_dense(b, net.q, tol, cfg.max_iters)
        if diverged:
            return StepResult(None, _divergence_event(state, cfg))
    new = SystemState(
        k=state.k + 1,
        t=cfg.grid.t0 + cfg.grid.dt * (state.k + 1),
        x=x_new,
        l=state.l + dl,
    )
    return StepResult(new, None, delta_l=dl)


def _zero_set(x: np.ndarray, eps0: float) -> np.ndarray:
    return np.flatnonzero(x <= eps0)


def _state_rho(x: np.ndarray, cfg: SystemConfig) -> Tuple[np.ndarray, float]:
    zero = _zero_set(x, cfg.eps0)
    net = cfg.net
    if net.is_uniform:
        # identity covariance: the active closure of a nonempty set is itself
        rho = net.alpha * zero.size / net.n if zero.size else -np.inf
        return zero, rho
    act = active_nodes(net, zero)
    rho = spectral_radius(net, act).rho if act else -np.inf
    return zero, rho


def _divergence_event(state: SystemState, cfg: SystemConfig) -> BreakdownEvent:
    zero, rho = _state_rho(state.x, cfg)
    return BreakdownEvent(
        occurred=True,
        tau=state.t,
        trigger=TRIGGER_DIVERGENCE,
        zero_set_at_tau=tuple(int(i) for i in zero),
        rho_at_tau=float(rho),
    )


@dataclass(frozen=True)
class SystemTrajectory:
    """Recorded run, truncated at breakdown (the state at tau is included)."""

    times: np.ndarray
    ell: np.ndarray
    zero_counts: np.ndarray
    rho_active: np.ndarray
    breakdown: BreakdownEvent
    x: Optional[np.ndarray] = None
    l: Optional[np.ndarray] = None
    snapshots: Dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def final_x(self) -> Optional[np.ndarray]:
        return self.x[-1] if self.x is not None else None


def simulate(cfg: SystemConfig, noise: NoiseEnsemble) -> SystemTrajectory:
    """Run until the horizon or the first breakdown trigger.

    The trigger check runs on every recorded grid state, including t = 0, so
    a system that starts with a supercritical active zero set reports
    tau = t0 immediately.
    """
    if noise.n != cfg.net.n:
        raise DimensionMismatch(f"noise dimension {noise.n} != system dimension {cfg.net.n}")
    if noise.grid != cfg.grid:
        raise DimensionMismatch("noise grid does not match system grid")
    uniform_trigger = TRIGGER_ZERO_COUNT if cfg.net.is_uniform else TRIGGER_SPECTRAL
    n_steps = cfg.grid.n_steps
    times = cfg.grid.times
    x = cfg.initial.copy()
    l = np.zeros_like(x)
    ell = [float(l.mean())]
    zero_counts: List[int] = []
    rhos: List[float] = []
    xs: List[np.ndarray] = [x.copy()] if cfg.record_paths else []
    ls: List[np.ndarray] = [l.copy()] if cfg.record_paths else []
    snapshots: Dict[float, np.ndarray] = {}
    snap_left = sorted(cfg.snapshot_times)
    breakdown = NO_BREAKDOWN
    state = SystemState(k=0, t=float(times[0]), x=x, l=l)

    def take_snapshots(t: float, xv: np.ndarray) -> None:
        while snap_left and snap_left[0] <= t + 1e-12:
            snapshots[snap_left.pop(0)] = xv.copy()

    chunks = noise.iter_chunks()
    buf: Optional[np.ndarray] = None
    buf_pos = 0
    k = 0
    while True:
        zero, rho = _state_rho(state.x, cfg)
        zero_counts.append(zero.size)
        rhos.append(rho)
        take_snapshots(state.t, state.x)
        if rho >= 1.0 - cfg.rho_margin:
            breakdown = BreakdownEvent(
                occurred=True,
                tau=state.t,
                trigger=uniform_trigger,
                zero_set_at_tau=tuple(int(i) for i in zero),
                rho_at_tau=float(rho),
            )
            break
        if k == n_steps:
            break
        if buf is None or buf_pos == buf.shape[0]:
            buf = next(chunks)
            if not np.all(np.isfinite(buf)):
                raise NonFiniteNoise("noise increment contains non-finite values")
            buf_pos = 0
        res = step(state, buf[buf_pos], cfg)
        buf_pos += 1
        if res.breakdown is not None:
            breakdown = res.breakdown
            break
        state = res.state
        k += 1
        ell.append(float(state.l.mean()))
        if cfg.record_paths:
            xs.append(state.x.copy())
            ls.append(state.l.copy())

    kept = len(ell)
    return SystemTrajectory(
        times=times[:kept],
        ell=np.array(ell),
        zero_counts=np.array(zero_counts, dtype=int),
        rho_active=np.array(rhos),
        breakdown=breakdown,
        x=np.array(xs) if cfg.record_paths else None,
        l=np.array(ls) if cfg.record_paths else None,
        snapshots=snapshots,
    )


# -- coupled comparison -------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    """Monotone-coupling check: system 1 has larger coupling, smaller start."""

    max_x_violation: float
    max_dl_violation: float
    steps_compared: int
    breakdown1: BreakdownEvent
    breakdown2: BreakdownEvent


def coupled_compare(cfg1: SystemConfig, cfg2: SystemConfig, noise: NoiseEnsemble) -> ComparisonReport:
    """Run both systems on the same noise; X1 <= X2 and dL1 >= dL2 must hold.

    Preconditions: identical grid and dimension, xi1 <= xi2, and q1 >= q2
    entrywise.
    """
    if cfg1.net.n != cfg2.net.n or cfg1.grid != cfg2.grid:
        raise PreconditionViolated("systems must share dimension and grid")
    if np.any(cfg1.initial > cfg2.initial):
        raise PreconditionViolated("xi1 <= xi2 required")
    if cfg1.net.is_uniform and cfg2.net.is_uniform:
        if cfg1.net.alpha < cfg2.net.alpha:
            raise PreconditionViolated("q1 >= q2 required")
    else:
        if np.any(cfg1.net.q_dense() < cfg2.net.q_dense()):
            raise PreconditionViolated("q1 >= q2 required")
    s1 = SystemState(0, cfg1.grid.t0, cfg1.initial.copy(), np.zeros(cfg1.net.n))
    s2 = SystemState(0, cfg2.grid.t0, cfg2.initial.copy(), np.zeros(cfg2.net.n))
    max_x = float(np.max(s1.x - s2.x))
    max_dl = -np.inf
    b1 = b2 = NO_BREAKDOWN
    steps = 0
    for chunk in noise.iter_chunks():
        for row in chunk:
            zero1, rho1 = _state_rho(s1.x, cfg1)
            if rho1 >= 1.0 - cfg1.rho_margin:
                b1 = BreakdownEvent(True, s1.t, TRIGGER_SPECTRAL,
                                    tuple(int(i) for i in zero1), float(rho1))
                break
            zero2, rho2 = _state_rho(s2.x, cfg2)
            if rho2 >= 1.0 - cfg2.rho_margin:
                b2 = BreakdownEvent(True, s2.t, TRIGGER_SPECTRAL,
                                    tuple(int(i) for i in zero2), float(rho2))
                break
            r1 = step(s1, row, cfg1)
            r2 = step(s2, row, cfg2)
            if r1.breakdown is not None or r2.breakdown is not None:
                b1 = r1.breakdown or b1
                b2 = r2.breakdown or b2
                break
            s1, s2 = r1.state, r2.state
            steps += 1
            max_x = max(max_x, float(np.max(s1.x - s2.x)))
            max_dl = max(max_dl, float(np.max(r2.delta_l - r1.delta_l)))
        else:
            continue
        break
    return ComparisonReport(
        max_x_violation=max_x,
        max_dl_violation=max_dl if steps else 0.0,
        steps_compared=steps,
        breakdown1=b1,
        breakdown2=b2,
    )


# -- batched uniform replicas --------------------------------------------------

@dataclass(frozen=True)
class UniformBatchResult:
    """Replica ensemble for the uniform network; rows frozen after breakdown."""

    times: np.ndarray
    ell: np.ndarray          # [replicas, len(times)], NaN past breakdown
    atom: np.ndarray         # zero-set fraction, same shape
    tau: np.ndarray          # +inf where no breakdown
    trigger: Tuple[Optional[str], ...]
    zero_count_at_tau: np.ndarray
    final_x: Optional[np.ndarray] = None


def run_uniform_batch(
    alpha: float,
    xi: np.ndarray,
    grid: TimeGrid,
    base_seed: int,
    eps0: Optional[float] = None,
    rho_margin: float = _RHO_MARGIN,
    max_iters: Optional[int] = None,
    keep_final_x: bool = False,
) -> UniformBatchResult:
    """Run `replicas` independent uniform systems in lockstep.

    Replica r draws its noise from seed base_seed + r, stream 0, identical to
    a solo run with that seed; converged rows freeze inside the shared
    fixed-point iteration so the batch reproduces solo trajectories exactly.
    """
    xi = np.asarray(xi, dtype=float)
    reps, n = xi.shape
    if np.any(xi < 0):
        raise NegativeStart("initial condition must be nonnegative")
    eps = float(np.sqrt(grid.dt)) if eps0 is None else eps0
    iters = max_iters if max_iters is not None else 10 * n + 100
    sqrt_dt = np.sqrt(grid.dt)
    rngs = [
        np.random.default_rng(np.random.SeedSequence(base_seed + r, spawn_key=(0,)))
        for r in range(reps)
    ]
    t_count = grid.n_steps + 1
    times = grid.times
    ell = np.full((reps, t_count), np.nan)
    atom = np.full((reps, t_count), np.nan)
    tau = np.full(reps, np.inf)
    trigger: List[Optional[str]] = [None] * reps
    zc_at_tau = np.zeros(reps, dtype=int)
    x = xi.copy()
    l = np.zeros_like(x)
    alive = np.ones(reps, dtype=bool)

    # breakdown when alpha * count / n >= 1 - margin
    def check_state(k: int) -> None:
        counts = (x <= eps).sum(axis=1)
        ell[alive, k] = l[alive].mean(axis=1)
        atom[alive, k] = counts[alive] / n
        if alpha <= 0:
            return
        bad = alive & (alpha * counts / n >= 1.0 - rho_margin)
        if bad.any():
            for r in np.flatnonzero(bad):
                tau[r] = times[k]
                trigger[r] = TRIGGER_ZERO_COUNT
                zc_at_tau[r] = counts[r]
            alive[bad] = False

    block = max(1, (1 << 23) // max(1, reps * n))
    k = 0
    check_state(0)
    while k < grid.n_steps and alive.any():
        rows = min(block, grid.n_steps - k)
        noise = np.empty((reps, rows, n))
        for r in range(reps):
            # draw for every replica, dead or alive, to keep streams aligned
            noise[r] = rngs[r].standard_normal((rows, n))
        noise *= sqrt_dt
        for j in range(rows):
            b = x + noise[:, j, :]
            tol = 1e-12 * np.maximum(1.0, np.abs(x).max(axis=1))
            tol_m = tol / max(alpha, 1.0)
            m, diverged = _lfp_uniform_batch(b, alpha, tol_m, iters, active=alive)
            newly_div = alive & diverged
            if newly_div.any():
                for r in np.flatnonzero(newly_div):
                    tau[r] = times[k]
                    trigger[r] = TRIGGER_DIVERGENCE
                    # the failing step's own zero set, not the previous state's
                    zc_at_tau[r] = _blocking_count(b[r], alpha)
                alive[newly_div] = False
            move = alive
            if move.any():
                u = b[move] - alpha * m[move, None]
                x[move] = np.maximum(u, 0.0)
                l[move] += np.maximum(-u, 0.0)
            k += 1
            check_state(k)
            if not alive.any():
                break
    return UniformBatchResult(
        times=times,
        ell=ell,
        atom=atom,
        tau=tau,
        trigger=tuple(trigger),
        zero_count_at_tau=zc_at_tau,
        final_x=x.copy() if keep_final_x else None,
    )
