"""Named experiments behind the CLI: each validates its parameters, runs the
relevant solvers, and emits the documented CSV/JSON artifacts.

Seeding rule: run index i (in the order runs are listed in the manifest) uses
seed base_seed + i, so any single run can be reproduced in isolation.
"""
from __future__ import annotations

import dataclasses
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .errors import ConfigError, TooLarge
from .fokker_planck import fp_solve, l1_distance
from .io import (
    read_matrix_csv,
    write_columns,
    write_csv,
    write_json,
)
from .laws import DiracLaw, ExponentialLaw, Law, parse_law
from .meanfield import EllPath, MeanFieldConfig, solve_particle, solve_picard
from .network import _CLASSIFY_MAX_N, InteractionNetwork, classify_regime
from .noise import TimeGrid, initial_rng, sample_noise
from .finite_system import SystemConfig, simulate
from .profiles import (
    ExponentialProfile,
    SelfSimilarProfile,
    convergence_experiment,
    wasserstein1,
)


class ExperimentContext:
    """Mutable run state: resolved parameters, seed bookkeeping, artifacts."""

    def __init__(self, params: Dict[str, Any], base_seed: int, replicas: int,
                 outdir: Path) -> None:
        self.params = params
        self.base_seed = base_seed
        self.replicas = replicas
        self.outdir = outdir
        self.artifacts: List[str] = []
        self.seeds: List[int] = []

    def emit(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.outdir / name

    def next_seed(self) -> int:
        s = self.base_seed + len(self.seeds)
        self.seeds.append(s)
        return s


@dataclasses.dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: Dict[str, Any]
    run: Callable[[ExperimentContext], dict]
    validate: Callable[[Dict[str, Any]], None]
    default_replicas: int = 1


def merge_params(defaults: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
    unknown = sorted(set(user) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}")
    out = dict(defaults)
    out.update(user)
    return out


def _check_alpha(value) -> float:
    value = float(value)
    if value < 0:
        raise ConfigError("alpha must be nonnegative")
    return value


def _check_positive(params: Dict[str, Any], *names: str) -> None:
    for name in names:
        if not float(params[name]) > 0:
            raise ConfigError(f"{name} must be positive, got {params[name]}")


def _law_of(params: Dict[str, Any], key: str = "initial") -> Law:
    spec = params[key]
    if not isinstance(spec, dict):
        raise ConfigError(f"{key} must be a table with a 'kind' entry")
    return parse_law(spec)


def _grid_of(params: Dict[str, Any]) -> TimeGrid:
    dt = float(params["dt"])
    horizon = float(params["horizon"])
    n = int(round(horizon / dt))
    if n < 1:
        raise ConfigError(f"horizon {horizon} shorter than one step dt={dt}")
    return TimeGrid(0.0, dt, n)


def _ell_csv(path: Path, ep: EllPath) -> None:
    write_columns(path, ["t", "ell", "atom_mass"], ep.times, ep.ell, ep.atom_mass)


# -- fig1: averaged pushing across the interaction strength sweep ---------------

_FIG1_DEFAULTS: Dict[str, Any] = {
    "alphas": [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
    "n_particles": 100_000,
    "dt": 1e-3,
    "horizon": 1.0,
    "initial": {"kind": "exponential", "rate": 1.0},
}


def _fig1_validate(params: Dict[str, Any]) -> None:
    for a in params["alphas"]:
        _check_alpha(a)
    _check_positive(params, "dt", "horizon", "n_particles")
    _law_of(params)


def _fig1_run(ctx: ExperimentContext) -> dict:
    law = _law_of(ctx.params)
    grid = _grid_of(ctx.params)
    m = int(ctx.params["n_particles"])
    summary: Dict[str, Any] = {}
    for alpha in ctx.params["alphas"]:
        alpha = float(alpha)
        cfg = MeanFieldConfig(alpha=alpha, initial_law=law, grid=grid,
                              n_samples=m, seed=ctx.next_seed())
        ep = solve_particle(cfg)
        tag = f"{alpha:g}"
        _ell_csv(ctx.emit(f"fig1_alpha_{tag}.csv"), ep)
        if alpha > 1.0:
            write_json(ctx.emit(f"fig1_alpha_{tag}_breakdown.json"), {
                "T": ep.T_breakdown if math.isfinite(ep.T_breakdown) else None,
                "alpha": alpha,
                "M": m,
                "dt": grid.dt,
                "epsilon0": cfg.eps0,
            })
        summary[tag] = {
            "T_breakdown": ep.T_breakdown if math.isfinite(ep.T_breakdown) else None,
            "ell_final": float(ep.ell[-1]),
        }
    return summary


# -- fig2: empirical densities against the analytic profiles --------------------

_FIG2_DEFAULTS: Dict[str, Any] = {
    "n_particles": 100_000,
    "dt": 1e-3,
    "t_final": 10.0,
    "stationary_rate": 1.0,
    "selfsimilar_alpha": 0.5,
    "table_points": 601,
}


def _fig2_validate(params: Dict[str, Any]) -> None:
    _check_positive(params, "dt", "t_final", "n_particles", "stationary_rate")
    a = _check_alpha(params["selfsimilar_alpha"])
    if not a < 1:
        raise ConfigError(f"selfsimilar_alpha must be < 1, got {a}")


def _profile_table(path: Path, profile, n_points: int) -> None:
    xs = np.linspace(0.0, 6.0 * profile.mean, n_points)
    write_columns(path, ["x", "density", "cdf"],
                  xs, profile.density(xs), profile.cdf(xs))


def _fig2_run(ctx: ExperimentContext) -> dict:
    p = ctx.params
    t_final = float(p["t_final"])
    dt = float(p["dt"])
    grid = TimeGrid(0.0, dt, int(round(t_final / dt)))
    m = int(p["n_particles"])
    n_pts = int(p["table_points"])

    rate = float(p["stationary_rate"])
    stat_cfg = MeanFieldConfig(alpha=1.0, initial_law=ExponentialLaw(rate),
                               grid=grid, n_samples=m, seed=ctx.next_seed())
    stat = solve_particle(stat_cfg, snapshot_times=(t_final,))
    stat_x = stat.snapshots[t_final]
    write_columns(ctx.emit("fig2_stationary_samples.csv"), ["x"], stat_x)
    _ell_csv(ctx.emit("fig2_stationary_ell.csv"), stat)
    _profile_table(ctx.emit("fig2_stationary_profile.csv"),
                   ExponentialProfile(rate), n_pts)

    alpha = float(p["selfsimilar_alpha"])
    ss_cfg = MeanFieldConfig(alpha=alpha, initial_law=DiracLaw(0.0),
                             grid=grid, n_samples=m, seed=ctx.next_seed())
    ss = solve_particle(ss_cfg, snapshot_times=(t_final,))
    ss_x = ss.snapshots[t_final] / np.sqrt(t_final)
    write_columns(ctx.emit("fig2_selfsimilar_samples.csv"), ["x"], ss_x)
    _ell_csv(ctx.emit("fig2_selfsimilar_ell.csv"), ss)
    profile = SelfSimilarProfile.for_alpha(alpha)
    _profile_table(ctx.emit("fig2_selfsimilar_profile.csv"), profile, n_pts)

    return {
        "stationary_w1": wasserstein1(stat_x, ExponentialLaw(rate)),
        "selfsimilar_w1": wasserstein1(ss_x, profile),
    }


# -- regime classification from a matrix file ------------------------------------

_REGIME_DEFAULTS: Dict[str, Any] = {
    "matrix": "",
    "zero_support": [],
    "noise_variances": [],
}


def _regime_net(params: Dict[str, Any]) -> InteractionNetwork:
    path = params["matrix"]
    if not path:
        raise ConfigError("regime_classify needs params.matrix = <csv path>")
    q = read_matrix_csv(path)
    variances = params["noise_variances"]
    cov = None
    if variances:
        if len(variances) != q.shape[0]:
            raise ConfigError(
                f"noise_variances has {len(variances)} entries for n={q.shape[0]}"
            )
        cov = np.diag(np.asarray(variances, dtype=float))
    return InteractionNetwork.dense(q, cov=cov)


def _regime_validate(params: Dict[str, Any]) -> None:
    net = _regime_net(params)
    if net.n > _CLASSIFY_MAX_N:
        raise TooLarge(
            f"classification enumerates subsets; n = {net.n} > {_CLASSIFY_MAX_N}"
        )
    for i in params["zero_support"]:
        if not 0 <= int(i) < net.n:
            raise ConfigError(f"zero_support index {i} outside 0..{net.n - 1}")


def _regime_run(ctx: ExperimentContext) -> dict:
    net = _regime_net(ctx.params)
    support = [int(i) for i in ctx.params["zero_support"]] or None
    report = classify_regime(net, zero_support=support)
    payload = {
        "regime": report.regime,
        "rho_active": report.rho_active,
        "finite_breakdown": report.finite_breakdown,
        "witnesses": [
            {
                "subset": list(w.subset),
                "rho": w.rho,
                "certified": w.certified,
                "value": w.value,
                "undetermined": w.undetermined,
            }
            for w in report.witnesses
        ],
        "undetermined": [list(s) for s in report.undetermined],
        "rho_zero_support": report.rho_zero_support,
        "breakdown_for_support": report.breakdown_for_support,
    }
    write_json(ctx.emit("regime_report.json"), payload)
    return {"regime": report.regime, "finite_breakdown": report.finite_breakdown}


# -- propagation-of-chaos rate ----------------------------------------------------

_POC_DEFAULTS: Dict[str, Any] = {
    "alpha": 0.5,
    "dt": 1e-3,
    "horizon": 1.0,
    "initial": {"kind": "exponential", "rate": 1.0},
    "n_values": [100, 1000, 10000],
    "reference_samples": 200_000,
    "picard_tol": 1e-8,
    "picard_max_iters": 200,
}


def _poc_validate(params: Dict[str, Any]) -> None:
    a = _check_alpha(params["alpha"])
    if a > 1:
        raise ConfigError(f"poc_rate needs alpha <= 1 for a mean-field reference, got {a}")
    _check_positive(params, "dt", "horizon", "reference_samples", "picard_tol",
                    "picard_max_iters")
    if not params["n_values"]:
        raise ConfigError("n_values must be a nonempty list")
    _law_of(params)


def _poc_run(ctx: ExperimentContext) -> dict:
    p = ctx.params
    law = _law_of(p)
    grid = _grid_of(p)
    alpha = float(p["alpha"])
    ref_cfg = MeanFieldConfig(alpha=alpha, initial_law=law, grid=grid,
                              n_samples=int(p["reference_samples"]),
                              seed=ctx.next_seed(),
                              picard_tol=float(p["picard_tol"]),
                              picard_max_iters=int(p["picard_max_iters"]))
    ref = solve_picard(ref_cfg).ell

    rows = []
    medians = []
    n_values = [int(n) for n in p["n_values"]]
    for n in n_values:
        errs = []
        for r in range(ctx.replicas):
            seed = ctx.next_seed()
            ep = solve_particle(dataclasses.replace(ref_cfg, n_samples=n, seed=seed))
            sup = float(np.max(np.abs(ep.ell - ref)))
            rows.append((n, r, seed, sup))
            errs.append(sup)
        medians.append(float(np.median(errs)))
    write_csv(ctx.emit("poc_errors.csv"), ["n", "replica", "seed", "sup_error"], rows)
    slope, intercept = np.polyfit(np.log10(n_values), np.log10(medians), 1)
    fit = {
        "slope": float(slope),
        "intercept": float(intercept),
        "n_values": n_values,
        "median_sup_errors": medians,
    }
    write_json(ctx.emit("poc_fit.json"), fit)
    return fit


# -- deterministic density cross-check ---------------------------------------------

_PDE_DEFAULTS: Dict[str, Any] = {
    "alpha": 1.0,
    "initial": {"kind": "exponential", "rate": 1.0},
    "h": 1e-3,
    "horizon": 1.0,
    "boundary_order": 2,
    "snapshot_times": [1.0],
    "particle_n": 100_000,
    "dt": 1e-3,
}


def _pde_validate(params: Dict[str, Any]) -> None:
    _check_alpha(params["alpha"])
    _check_positive(params, "h", "horizon", "dt", "particle_n")
    if int(params["boundary_order"]) not in (0, 1, 2):
        raise ConfigError(f"boundary_order must be 0, 1 or 2, got {params['boundary_order']}")
    _law_of(params)


def _pde_run(ctx: ExperimentContext) -> dict:
    p = ctx.params
    alpha = float(p["alpha"])
    law = _law_of(p)
    horizon = float(p["horizon"])
    snaps = tuple(float(t) for t in p["snapshot_times"])
    sol = fp_solve(law, alpha, horizon, h=float(p["h"]),
                   snapshot_times=snaps, boundary_order=int(p["boundary_order"]))
    write_columns(ctx.emit("pde_flux.csv"), ["t", "mu0", "ell"],
                  sol.record.times, sol.record.mu0, sol.record.ell)
    for t, fld in sorted(sol.snapshots.items()):
        write_columns(ctx.emit(f"pde_density_t{t:g}.csv"), ["x", "mu"],
                      fld.grid.centers(), fld.values)

    summary: Dict[str, Any] = {
        "ell_final_pde": float(sol.record.ell[-1]),
        "pde_breakdown_time": sol.breakdown.time if sol.breakdown else None,
        "mass_error_max": sol.mass_error_max,
        "n_steps": sol.n_steps,
    }
    if sol.breakdown is None:
        cfg = MeanFieldConfig(alpha=alpha, initial_law=law, grid=_grid_of(p),
                              n_samples=int(p["particle_n"]), seed=ctx.next_seed())
        ep = solve_particle(cfg, snapshot_times=(horizon,))
        end = sol.snapshots[horizon]
        summary["ell_final_particle"] = float(ep.ell[-1])
        summary["w1_vs_particle"] = wasserstein1(ep.snapshots[horizon], end)
        if alpha == 1.0 and isinstance(law, ExponentialLaw):
            summary["l1_vs_stationary"] = l1_distance(end, law)
            exact = 0.5 * law.rate * horizon
            summary["ell_rel_err_vs_exact"] = abs(summary["ell_final_pde"] - exact) / exact
    write_json(ctx.emit("pde_summary.json"), summary)
    return summary


# -- long-time convergence to the limiting profile ---------------------------------

_CONV_DEFAULTS: Dict[str, Any] = {
    "alpha": 1.0,
    "initial": {"kind": "exponential", "rate": 1.0},
    "n_particles": 100_000,
    "dt": 1e-3,
    "checkpoints": [1.0, 3.0, 10.0],
}


def _conv_validate(params: Dict[str, Any]) -> None:
    a = _check_alpha(params["alpha"])
    if a > 1:
        raise ConfigError(f"no limiting profile for alpha > 1, got {a}")
    _check_positive(params, "dt", "n_particles")
    if not params["checkpoints"]:
        raise ConfigError("checkpoints must be a nonempty list")
    law = _law_of(params)
    if a == 1.0 and not isinstance(law, ExponentialLaw):
        raise ConfigError("alpha = 1 convergence targets Exp(rate); use an exponential initial")


def _conv_run(ctx: ExperimentContext) -> dict:
    p = ctx.params
    alpha = float(p["alpha"])
    law = _law_of(p)
    checkpoints = tuple(sorted(float(t) for t in p["checkpoints"]))
    horizon = checkpoints[-1]
    grid = TimeGrid(0.0, float(p["dt"]), int(round(horizon / float(p["dt"]))))
    cfg = MeanFieldConfig(alpha=alpha, initial_law=law, grid=grid,
                          n_samples=int(p["n_particles"]), seed=ctx.next_seed())
    if alpha == 1.0:
        target = ExponentialProfile(rate=law.rate)
        rescale = False
    else:
        target = SelfSimilarProfile.for_alpha(alpha)
        rescale = True
    points = convergence_experiment(cfg, target, checkpoints, rescale=rescale)
    write_csv(ctx.emit("convergence.csv"), ["t", "w1", "w1_se", "drift_error"],
              [(c.t, c.w1, c.w1_se, c.drift_error) for c in points])
    return {
        "rescaled": rescale,
        "w1": {f"{c.t:g}": c.w1 for c in points},
    }


# -- raw finite-system run (dense or uniform network) -------------------------------

_SYSTEM_DEFAULTS: Dict[str, Any] = {
    "matrix": "",
    "uniform_alpha": -1.0,
    "n": 0,
    "initial": {"kind": "exponential", "rate": 1.0},
    "initial_values": [],
    "dt": 1e-3,
    "horizon": 1.0,
    "record_paths": False,
    "snapshot_times": [],
}


def _system_validate(params: Dict[str, Any]) -> None:
    _check_positive(params, "dt", "horizon")
    has_matrix = bool(params["matrix"])
    has_uniform = float(params["uniform_alpha"]) >= 0
    if has_matrix == has_uniform:
        raise ConfigError("give exactly one of params.matrix or params.uniform_alpha")
    if has_uniform:
        _check_alpha(params["uniform_alpha"])
        if int(params["n"]) < 1:
            raise ConfigError("uniform networks need params.n >= 1")
    else:
        read_matrix_csv(params["matrix"])
    if params["initial_values"]:
        vals = np.asarray(params["initial_values"], dtype=float)
        if np.any(vals < 0):
            raise ConfigError("initial_values must be nonnegative")
    else:
        _law_of(params)


def _system_run(ctx: ExperimentContext) -> dict:
    p = ctx.params
    if p["matrix"]:
        net = InteractionNetwork.dense(read_matrix_csv(p["matrix"]))
    else:
        net = InteractionNetwork.uniform(_check_alpha(p["uniform_alpha"]), int(p["n"]))
    grid = _grid_of(p)
    seed = ctx.next_seed()
    if p["initial_values"]:
        xi = np.asarray(p["initial_values"], dtype=float)
        if xi.shape != (net.n,):
            raise ConfigError(f"initial_values has {xi.size} entries for n={net.n}")
    else:
        xi = _law_of(p).sample(initial_rng(seed), net.n)
    record = bool(p["record_paths"])
    cfg = SystemConfig(net=net, initial=xi, grid=grid, record_paths=record,
                       snapshot_times=tuple(float(t) for t in p["snapshot_times"]))
    traj = simulate(cfg, sample_noise(grid, net.cov, seed))

    header = ["t"]
    cols = [traj.times]
    if record:
        for i in range(net.n):
            header.append(f"X_{i + 1}")
            cols.append(traj.x[:, i])
        for i in range(net.n):
            header.append(f"L_{i + 1}")
            cols.append(traj.l[:, i])
    header += ["zero_count", "rho_active"]
    cols += [traj.zero_counts, traj.rho_active]
    write_columns(ctx.emit("trajectory.csv"), header, *cols)
    write_json(ctx.emit("breakdown.json"), traj.breakdown.to_dict())
    return {
        "n": net.n,
        "breakdown": traj.breakdown.to_dict(),
        "ell_final": float(traj.ell[-1]),
    }


REGISTRY: Dict[str, Experiment] = {
    e.name: e
    for e in (
        Experiment("fig1_trajectories",
                   "averaged pushing ell(t) for alpha = 0, 0.25, ..., 2",
                   _FIG1_DEFAULTS, _fig1_run, _fig1_validate),
        Experiment("fig2_density",
                   "empirical densities at t_final vs analytic profiles",
                   _FIG2_DEFAULTS, _fig2_run, _fig2_validate),
        Experiment("regime_classify",
                   "spectral regime report for an interaction matrix file",
                   _REGIME_DEFAULTS, _regime_run, _regime_validate),
        Experiment("poc_rate",
                   "sup-error of particle ell against a Picard reference vs N",
                   _POC_DEFAULTS, _poc_run, _poc_validate, default_replicas=20),
        Experiment("pde_crosscheck",
                   "finite-volume density solve cross-checked against particles",
                   _PDE_DEFAULTS, _pde_run, _pde_validate),
        Experiment("convergence",
                   "W1 distance to the limiting profile at checkpoint times",
                   _CONV_DEFAULTS, _conv_run, _conv_validate),
        Experiment("system_run",
                   "single finite-system trajectory with breakdown report",
                   _SYSTEM_DEFAULTS, _system_run, _system_validate),
    )
}
