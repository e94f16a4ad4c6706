"""Interaction networks, Perron eigenstructure, and breakdown regime classification.

A network couples N reflected particles through nonnegative weights q_ij
(particle i is pushed down by j's boundary visits). The uniform network
q_ij = alpha/N is kept implicit so large exchangeable systems never
materialize an N x N matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IndexOutOfRange, NegativeEntry, NoConvergence, TooLarge
from .noise import CovarianceSpec

_POWER_TOL = 1e-10
_POWER_MAX_SWEEPS = 100_000
_CRIT_TOL = 1e-9
_NOISE_CERT_TOL = 1e-12
_CLASSIFY_MAX_N = 16


@dataclass(frozen=True)
class InteractionNetwork:
    """Coupling matrix plus driving covariance.

    q is None for the uniform network with entries alpha/n.
    """

    n: int
    q: Optional[np.ndarray]
    alpha: Optional[float]
    cov: CovarianceSpec

    @classmethod
    def dense(cls, q: np.ndarray, cov: Optional[CovarianceSpec] = None) -> "InteractionNetwork":
        q = np.asarray(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"q must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("q must be finite")
        if np.any(q < 0):
            i, j = np.argwhere(q < 0)[0]
            raise NegativeEntry(f"q[{i},{j}] = {q[i, j]} is negative")
        n = q.shape[0]
        if cov is None:
            cov = CovarianceSpec.identity(n)
        if cov.n != n:
            raise ValueError(f"covariance dimension {cov.n} != {n}")
        return cls(n=n, q=q, alpha=None, cov=cov)

    @classmethod
    def uniform(cls, alpha: float, n: int, cov: Optional[CovarianceSpec] = None) -> "InteractionNetwork":
        if alpha < 0:
            raise NegativeEntry(f"alpha must be nonnegative, got {alpha}")
        if cov is None:
            cov = CovarianceSpec.identity(n)
        if cov.n != n:
            raise ValueError(f"covariance dimension {cov.n} != {n}")
        return cls(n=n, q=None, alpha=float(alpha), cov=cov)

    @property
    def is_uniform(self) -> bool:
        return self.q is None

    def q_dense(self) -> np.ndarray:
        if self.q is not None:
            return self.q
        return np.full((self.n, self.n), self.alpha / self.n)


def _resolve_nodes(nodes: Optional[Iterable[int]], n: int) -> np.ndarray:
    if nodes is None:
        return np.arange(n)
    idx = np.array(sorted({int(i) for i in nodes}), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        bad = idx[0] if idx[0] < 0 else idx[-1]
        raise IndexOutOfRange(f"node {bad} outside [0, {n})")
    return idx


def minor(net: InteractionNetwork, nodes: Iterable[int]) -> np.ndarray:
    """Principal submatrix Q[I, I] with I sorted."""
    idx = _resolve_nodes(nodes, net.n)
    if net.is_uniform:
        return np.full((idx.size, idx.size), net.alpha / net.n)
    return net.q[np.ix_(idx, idx)]


def active_nodes(net: InteractionNetwork, nodes: Optional[Iterable[int]] = None) -> FrozenSet[int]:
    """Subset of `nodes` reachable from a noise-carrying node along influence edges.

    There is an edge u -> w when q_wu > 0 (u's pushing moves w), and node j
    carries noise when a_jj > 0. A noisy node reaches itself.
    """
    idx = _resolve_nodes(nodes, net.n)
    if idx.size == 0:
        return frozenset()
    diag = net.cov.diagonal()[idx]
    noisy = diag > 0
    if net.is_uniform:
        if not noisy.any():
            return frozenset()
        if net.alpha > 0:
            return frozenset(int(i) for i in idx)
        return frozenset(int(i) for i in idx[noisy])
    succ = net.q[np.ix_(idx, idx)].T > 0  # succ[u, w]: u influences w
    reach = noisy.copy()
    frontier = noisy.copy()
    while frontier.any():
        new = succ[frontier].any(axis=0) & ~reach
        reach |= new
        frontier = new
    return frozenset(int(i) for i in idx[reach])


def _tarjan_scc(adj: List[List[int]]) -> List[List[int]]:
    """Strongly connected components, iterative, in reverse topological order."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    onstack = [False] * n
    stack: List[int] = []
    comps: List[List[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work: List[Tuple[int, int]] = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                onstack[v] = True
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if onstack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def _perron_block(block: np.ndarray) -> Tuple[float, np.ndarray, bool]:
    """Perron root and positive left eigenvector of an irreducible block.

    Power iteration on (B + I)^T with Collatz-Wielandt bracketing; the shift
    makes the block primitive so the ratios converge for periodic graphs too.
    Returns (rho, v, exact) where exact marks the 1x1 shortcut.
    """
    m = block.shape[0]
    if m == 1:
        return float(block[0, 0]), np.ones(1), True
    bt = block.T + np.eye(m)
    v = np.full(m, 1.0 / m)
    lo = hi = 0.0
    for _ in range(_POWER_MAX_SWEEPS):
        w = bt @ v
        ratios = w / v
        lo = float(ratios.min())
        hi = float(ratios.max())
        v = w / w.sum()
        if hi - lo <= _POWER_TOL * hi:
            return float(0.5 * (lo + hi) - 1.0), v, False
    raise NoConvergence(
        f"power iteration stalled after {_POWER_MAX_SWEEPS} sweeps",
        best=float(0.5 * (lo + hi) - 1.0),
        gap=float(hi - lo),
    )


@dataclass(frozen=True)
class SpectralResult:
    """Perron data of a principal minor.

    vector is indexed by sorted(I); component holds original node labels of
    the irreducible block achieving rho. degenerate marks ill-posed
    eigenvector extension (tied blocks upstream); n_maximizing counts blocks
    achieving rho within tolerance.
    """

    rho: float
    vector: Optional[np.ndarray]
    component: FrozenSet[int]
    n_maximizing: int = 1
    degenerate: bool = False
    residual: float = 0.0


@dataclass(frozen=True)
class _BlockData:
    nodes: List[int]  # local indices
    rho: float
    perron: np.ndarray


def _block_analysis(q_local: np.ndarray) -> Tuple[List[_BlockData], float]:
    m = q_local.shape[0]
    adj = [list(np.flatnonzero(q_local[i] > 0)) for i in range(m)]
    blocks = []
    for comp in _tarjan_scc(adj):
        comp = sorted(comp)
        rho_b, v_b, _ = _perron_block(q_local[np.ix_(comp, comp)])
        blocks.append(_BlockData(nodes=comp, rho=rho_b, perron=v_b))
    rho = max(b.rho for b in blocks)
    return blocks, rho


def _extend_left_vector(
    q_local: np.ndarray, blocks: List[_BlockData], target: _BlockData, rho: float
) -> Tuple[np.ndarray, bool, float]:
    """Left eigenvector supported on the target block and its influence ancestors.

    Influence edges run u -> w when q_local[w, u] > 0; support must be closed
    under predecessors, so it is the target plus everything that can reach it.
    Upstream mass solves (rho I - Q_UU)^T v_U = Q[C, U]^T v_C, well posed when
    upstream blocks are strictly subcritical; ties flag the result degenerate.
    """
    m = q_local.shape[0]
    succ = q_local.T > 0
    in_target = np.zeros(m, dtype=bool)
    in_target[target.nodes] = True
    reach = in_target.copy()
    frontier = in_target.copy()
    while frontier.any():
        new = (succ.T[frontier].any(axis=0)) & ~reach  # predecessors of frontier
        reach |= new
        frontier = new
    upstream = reach & ~in_target
    degenerate = False
    v = np.zeros(m)
    v[target.nodes] = target.perron
    if upstream.any():
        u_idx = np.flatnonzero(upstream)
        c_idx = np.array(target.nodes, dtype=int)
        for b in blocks:
            if upstream[b.nodes[0]] and b.rho >= rho - _CRIT_TOL * max(1.0, abs(rho)):
                degenerate = True
        a_mat = (rho * np.eye(u_idx.size) - q_local[np.ix_(u_idx, u_idx)]).T
        rhs = q_local[np.ix_(c_idx, u_idx)].T @ v[c_idx]
        try:
            v_u = np.linalg.solve(a_mat, rhs)
        except np.linalg.LinAlgError:
            degenerate = True
            v_u = np.linalg.lstsq(a_mat, rhs, rcond=None)[0]
        if np.any(v_u < -1e-12 * max(1.0, float(np.abs(v_u).max(initial=0.0)))):
            degenerate = True
        v[u_idx] = np.maximum(v_u, 0.0)
    total = v.sum()
    if total > 0:
        v = v / total
    residual = float(np.abs(v @ q_local - rho * v).sum())
    return v, degenerate, residual


def _eigencone_representatives(
    q_local: np.ndarray,
) -> Tuple[float, List[Tuple[np.ndarray, List[int], bool, float]], int]:
    """One extended left eigenvector per maximizing irreducible block."""
    blocks, rho = _block_analysis(q_local)
    tol = _CRIT_TOL * max(1.0, abs(rho))
    maximizing = [b for b in blocks if b.rho >= rho - tol]
    reps = []
    for b in maximizing:
        v, degenerate, residual = _extend_left_vector(q_local, blocks, b, rho)
        reps.append((v, b.nodes, degenerate, residual))
    return rho, reps, len(maximizing)


def spectral_radius(
    net: InteractionNetwork,
    nodes: Optional[Iterable[int]] = None,
    want_vector: bool = False,
) -> SpectralResult:
    """Perron root of Q[I, I]; the empty set has rho = -inf.

    With want_vector, also a nonnegative l1-normalized left eigenvector,
    supported on a maximizing irreducible component and its influence
    ancestors.
    """
    idx = _resolve_nodes(nodes, net.n)
    if idx.size == 0:
        return SpectralResult(rho=-np.inf, vector=None, component=frozenset(), n_maximizing=0)
    if net.is_uniform:
        rho = net.alpha * idx.size / net.n
        if net.alpha == 0:
            comp = frozenset({int(idx[0])})
        else:
            comp = frozenset(int(i) for i in idx)
        vec = np.full(idx.size, 1.0 / idx.size) if want_vector else None
        return SpectralResult(rho=rho, vector=vec, component=comp)
    q_local = net.q[np.ix_(idx, idx)]
    if not want_vector:
        blocks, rho = _block_analysis(q_local)
        tol = _CRIT_TOL * max(1.0, abs(rho))
        maximizing = [b for b in blocks if b.rho >= rho - tol]
        best = min(maximizing, key=lambda b: b.nodes[0])
        comp = frozenset(int(idx[i]) for i in best.nodes)
        return SpectralResult(rho=rho, vector=None, component=comp, n_maximizing=len(maximizing))
    rho, reps, n_max = _eigencone_representatives(q_local)
    reps_sorted = sorted(reps, key=lambda r: (r[2], r[3], r[1][0]))
    v, comp_nodes, degenerate, residual = reps_sorted[0]
    comp = frozenset(int(idx[i]) for i in comp_nodes)
    return SpectralResult(
        rho=rho, vector=v, component=comp, n_maximizing=n_max,
        degenerate=degenerate, residual=residual,
    )


@dataclass(frozen=True)
class SubsetWitness:
    """Noise certificate outcome for one active-closed subset."""

    subset: Tuple[int, ...]
    rho: float
    certified: bool
    value: float
    undetermined: bool
    vector: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class RegimeReport:
    """Classification of the full system plus subset-level breakdown analysis.

    finite_breakdown is one of "Always", "Never", "InitialConditionDependent";
    undetermined lists subsets whose certificate could not be settled with one
    representative per maximizing component.
    """

    regime: str
    rho_active: float
    finite_breakdown: str
    witnesses: Tuple[SubsetWitness, ...] = ()
    undetermined: Tuple[Tuple[int, ...], ...] = ()
    rho_zero_support: Optional[float] = None
    breakdown_for_support: Optional[bool] = None


def _closure_masks(net: InteractionNetwork) -> dict:
    """Map every subset of nodes to its active closure, deduplicated, as bitmasks."""
    n = net.n
    q = net.q_dense()
    diag = net.cov.diagonal()
    succ_mask = [0] * n
    for u in range(n):
        mask = 0
        for w in np.flatnonzero(q[:, u] > 0):
            mask |= 1 << int(w)
        succ_mask[u] = mask
    noisy_mask = 0
    for j in np.flatnonzero(diag > 0):
        noisy_mask |= 1 << int(j)
    closures = {}
    for subset in range(1, 1 << n):
        reach = subset & noisy_mask
        frontier = reach
        while frontier:
            nxt = 0
            f = frontier
            while f:
                u = (f & -f).bit_length() - 1
                nxt |= succ_mask[u]
                f &= f - 1
            nxt &= subset & ~reach
            reach |= nxt
            frontier = nxt
        closures.setdefault(reach, subset)
    return closures


def classify_regime(
    net: InteractionNetwork, zero_support: Optional[Iterable[int]] = None
) -> RegimeReport:
    """Regime of the full active set and a subset-level breakdown verdict.

    Exhaustive over subsets, so the network dimension is capped at 16.
    """
    if net.n > _CLASSIFY_MAX_N:
        raise TooLarge(f"classification enumerates subsets; n = {net.n} > {_CLASSIFY_MAX_N}")
    full_active = active_nodes(net)
    rho_active = spectral_radius(net, full_active).rho if full_active else -np.inf
    if rho_active > 1.0 + _CRIT_TOL:
        regime = "Supercritical"
    elif rho_active >= 1.0 - _CRIT_TOL:
        regime = "Critical"
    else:
        regime = "Subcritical"

    rho_zero = None
    support_breaks: Optional[bool] = None
    if zero_support is not None:
        closure = active_nodes(net, zero_support)
        rho_zero = spectral_radius(net, closure).rho if closure else -np.inf
        support_breaks = bool(rho_zero >= 1.0 - _CRIT_TOL)

    if regime == "Supercritical":
        return RegimeReport(
            regime=regime, rho_active=rho_active, finite_breakdown="Always",
            rho_zero_support=rho_zero, breakdown_for_support=True,
        )
    if regime == "Subcritical":
        return RegimeReport(
            regime=regime, rho_active=rho_active, finite_breakdown="Never",
            rho_zero_support=rho_zero, breakdown_for_support=False,
        )

    q_full = net.q_dense()
    a_full = net.cov.dense()
    witnesses: List[SubsetWitness] = []
    undetermined: List[Tuple[int, ...]] = []
    definitive_fail = False
    for mask in _closure_masks(net):
        if mask == 0:
            continue
        idx = np.array([i for i in range(net.n) if mask >> i & 1], dtype=int)
        q_local = q_full[np.ix_(idx, idx)]
        rho, reps, n_max = _eigencone_representatives(q_local)
        if abs(rho - 1.0) > _CRIT_TOL:
            continue
        a_local = a_full[np.ix_(idx, idx)]
        best_val = -np.inf
        best_vec: Optional[np.ndarray] = None
        any_degenerate = False
        for v, _, degenerate, residual in reps:
            any_degenerate = any_degenerate or degenerate or residual > 1e-9
            val = float(v @ a_local @ v)
            if val > best_val:
                best_val, best_vec = val, v
        certified = best_val > _NOISE_CERT_TOL
        hazy = not certified and (n_max > 1 or any_degenerate)
        witnesses.append(
            SubsetWitness(
                subset=tuple(int(i) for i in idx),
                rho=rho,
                certified=certified,
                value=best_val,
                undetermined=hazy,
                vector=tuple(float(x) for x in best_vec) if best_vec is not None else None,
            )
        )
        if hazy:
            undetermined.append(tuple(int(i) for i in idx))
        elif not certified:
            definitive_fail = True

    if definitive_fail or undetermined:
        verdict = "InitialConditionDependent"
    else:
        verdict = "Always"
        support_breaks = True
    return RegimeReport(
        regime=regime,
        rho_active=rho_active,
        finite_breakdown=verdict,
        witnesses=tuple(witnesses),
        undetermined=tuple(undetermined),
        rho_zero_support=rho_zero,
        breakdown_for_support=support_breaks,
    )
