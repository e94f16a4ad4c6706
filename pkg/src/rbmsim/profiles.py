"""Long-time profiles on the half line and Wasserstein-1 comparison tools.

For subcritical coupling the centered system settles, after sqrt(t)
rescaling, onto the density

    f(x) = c * exp(-alpha c x - x^2 / 2),  x >= 0,

where c = c(alpha) makes f a probability density. The normalization
constant is written with the scaled complementary error function erfcx to
stay finite for alpha near one, where c blows up. At alpha = 1 the
exponential law is a fixed point and the averaged pushing grows linearly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import erfcx

from .errors import BracketFailure, DomainError, EmptySample, OutOfRange
from .laws import DiracLaw, EmpiricalLaw, ExponentialLaw, Law
from .meanfield import MeanFieldConfig, solve_particle

_SQRT_HALF_PI = float(np.sqrt(np.pi / 2.0))
_C_TOL = 1e-12


def normalization(c: float, alpha: float) -> float:
    """Total mass of exp(-alpha c x - x^2/2) scaled by c; equals 1 at c(alpha)."""
    return c * _SQRT_HALF_PI * erfcx(c * alpha / np.sqrt(2.0))


def solve_c_alpha(alpha: float) -> float:
    """Normalizing constant c(alpha) for 0 <= alpha < 1, bisected to 1e-12.

    The target grows like 1/(1 - alpha), so the bracket doubles upward until
    it straddles the root.
    """
    if not 0.0 <= alpha < 1.0:
        raise OutOfRange(f"profile requires 0 <= alpha < 1, got {alpha}")
    lo, hi = 1e-6, 10.0
    if normalization(lo, alpha) - 1.0 > 0:
        raise BracketFailure("normalization already above 1 at c = 1e-6")
    while normalization(hi, alpha) - 1.0 < 0:
        hi *= 2.0
        if hi > 1e9:
            raise BracketFailure("no normalization root below c = 1e9")
    while hi - lo > _C_TOL:
        mid = 0.5 * (lo + hi)
        if normalization(mid, alpha) - 1.0 < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gamma_alpha(alpha: float) -> float:
    """Quadratic decay rate c(alpha)^2 (1 - alpha) of the unit-mean rescaling.

    Increases from 2/pi at alpha = 0 to 1 as alpha -> 1.
    """
    c = solve_c_alpha(alpha)
    return c * c * (1.0 - alpha)


@dataclass(frozen=True)
class SelfSimilarProfile:
    """Law of X_t / sqrt(t) in the long-time limit from a zero start."""

    alpha: float
    c: float

    @classmethod
    def for_alpha(cls, alpha: float) -> "SelfSimilarProfile":
        return cls(alpha=alpha, c=solve_c_alpha(alpha))

    @property
    def b(self) -> float:
        return self.c * self.alpha

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.c * np.exp(-self.b * x - 0.5 * x * x)
        return np.where(x >= 0, out, 0.0)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        head = erfcx(self.b / np.sqrt(2.0))
        tail = erfcx((xp + self.b) / np.sqrt(2.0)) * np.exp(-self.b * xp - 0.5 * xp * xp)
        out = self.c * _SQRT_HALF_PI * (head - tail)
        return np.where(x >= 0, np.clip(out, 0.0, 1.0), 0.0)

    def quantile(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u >= 1):
            raise DomainError("quantile level must lie in [0, 1)")
        hi = 2.0
        while np.any(self.cdf(hi) < u.max(initial=0.0)):
            hi *= 2.0
        lo_v = np.zeros_like(u)
        hi_v = np.full_like(u, hi)
        for _ in range(80):
            mid = 0.5 * (lo_v + hi_v)
            below = self.cdf(mid) < u
            lo_v = np.where(below, mid, lo_v)
            hi_v = np.where(below, hi_v, mid)
        return 0.5 * (lo_v + hi_v)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.random(size))

    @property
    def mean(self) -> float:
        return self.c * (1.0 - self.alpha)

    @property
    def atom_at_zero(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ExponentialProfile:
    """Stationary profile at alpha = 1: Exp(rate) with linear pushing rate/2."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise OutOfRange(f"rate must be > 0, got {self.rate}")

    def _law(self) -> ExponentialLaw:
        return ExponentialLaw(rate=self.rate)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x) -> np.ndarray:
        return self._law().cdf(x)

    def quantile(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if np.any(u < 0) or np.any(u >= 1):
            raise DomainError("quantile level must lie in [0, 1)")
        return self._law().quantile(u)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self._law().sample(rng, size)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def ell(self, t) -> np.ndarray:
        """Averaged pushing along the stationary evolution: rate * t / 2."""
        return 0.5 * self.rate * np.asarray(t, dtype=float)

    @property
    def atom_at_zero(self) -> float:
        return 0.0


Profile = Union[SelfSimilarProfile, ExponentialProfile]
Distribution = Union[Profile, Law]


def _as_distribution(obj) -> Distribution:
    if isinstance(obj, np.ndarray) or isinstance(obj, (list, tuple)):
        arr = np.asarray(obj, dtype=float)
        if arr.size == 0:
            raise EmptySample("cannot compare an empty sample")
        return EmpiricalLaw.from_samples(arr)
    return obj


def wasserstein1(a, b) -> float:
    """W1 distance via quantile coupling.

    Two equal-size samples reduce to the mean absolute difference of sorted
    values; a sample against a smooth law averages |x_(i) - q((i-1/2)/n)|;
    two smooth laws integrate |q_a - q_b| over (0, 1).
    """
    a = _as_distribution(a)
    b = _as_distribution(b)
    a_emp = isinstance(a, EmpiricalLaw)
    b_emp = isinstance(b, EmpiricalLaw)
    if a_emp and b_emp:
        if a.n == b.n:
            return float(np.abs(a.values - b.values).mean())
        # step quantile functions: integrate exactly over merged level segments
        cuts = np.union1d(np.arange(1, a.n) / a.n, np.arange(1, b.n) / b.n)
        grid = np.concatenate([[0.0], cuts, [1.0]])
        mids = 0.5 * (grid[:-1] + grid[1:])
        widths = np.diff(grid)
        return float(np.sum(widths * np.abs(a.quantile(mids) - b.quantile(mids))))
    if a_emp or b_emp:
        emp, law = (a, b) if a_emp else (b, a)
        levels = (np.arange(emp.n) + 0.5) / emp.n
        return float(np.abs(emp.values - law.quantile(levels)).mean())
    val, _ = quad(lambda u: abs(float(a.quantile(u)) - float(b.quantile(u))),
                  0.0, 1.0, limit=200)
    return float(val)


def wasserstein1_se(sample, law) -> Tuple[float, float]:
    """Quantile-coupling W1 of a sample against a law, with a plug-in standard error."""
    emp = sample if isinstance(sample, EmpiricalLaw) else EmpiricalLaw.from_samples(sample)
    levels = (np.arange(emp.n) + 0.5) / emp.n
    gaps = np.abs(emp.values - law.quantile(levels))
    return float(gaps.mean()), float(gaps.std() / np.sqrt(emp.n))


@dataclass(frozen=True)
class ConvergencePoint:
    t: float
    w1: float
    w1_se: float
    drift_error: float


def convergence_experiment(
    cfg: MeanFieldConfig,
    target,
    checkpoints: Tuple[float, ...],
    rescale: bool = True,
) -> Tuple[ConvergencePoint, ...]:
    """Particle snapshots against a limiting profile at the given times.

    With rescale, snapshots are divided by sqrt(t) before comparison and the
    drift error |mean(xi)/(1-alpha) + ell(t) - c sqrt(t)| is reported; without
    it (stationary case) snapshots are compared directly and the drift error
    is |ell(t) - target.ell(t)|.
    """
    checkpoints = tuple(sorted(checkpoints))
    path = solve_particle(cfg, snapshot_times=checkpoints)
    out = []
    mean_xi = cfg.initial_law.mean()
    for t in checkpoints:
        if t not in path.snapshots:
            break  # breakdown before this checkpoint
        x = path.snapshots[t]
        k = int(np.argmin(np.abs(path.times - t)))
        ell_t = path.ell[k]
        if rescale:
            if t <= 0:
                raise OutOfRange("rescaled checkpoints must be positive")
            w1, se = wasserstein1_se(x / np.sqrt(t), target)
            drift = abs(mean_xi / (1.0 - cfg.alpha) + ell_t - target.c * np.sqrt(t))
        else:
            w1, se = wasserstein1_se(x, target)
            drift = abs(ell_t - float(target.ell(t)))
        out.append(ConvergencePoint(t=t, w1=w1, w1_se=se, drift_error=drift))
    return tuple(out)
