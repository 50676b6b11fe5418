"""Figure pipelines: time-series runs and coupling sweeps with event detection.

``run_fig1`` produces time series of the inversion, entropy and fluxes for the
two extreme coupling regimes. ``run_fig2``/``run_fig3`` sweep the coupling on
a log grid, integrate the full displaced-picture model until the inversion
first reaches zero (t*), and record the instantaneous observables there.

Every sweep point is integrated twice, at the working Fock cutoff and at
cutoff + 5; a point only counts as converged when all reported observables
agree within the gate tolerance (the cutoff is raised automatically, up to a
cap, until they do). Points whose inversion never crosses zero inside the
integration horizon are kept in the output, marked absent, rather than being
dropped.

Sweep points are independent and run across a process pool when
``workers > 1``; results are always collected in grid order, so the output is
identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    Picture,
    SystemParams,
    Trajectory,
    build_generator,
    evolve,
    integrate_chain,
    locate_inversion_zero,
    sigma_z_weights,
)
from .hilbert import excited_vacuum_density, partial_trace_field, von_neumann_entropy
from .thermo import (
    FluxSample,
    energy_balance_on_states,
    flux_sample,
    heat_flux_norm_full,
    stencil_half_widths,
    work_flux_norm,
)

FIG1_REGIMES = {
    "b_d": dict(g_over_kappa=1e-3, eps_over_kappa=1.0),
    "c_e": dict(g_over_kappa=1.0, eps_over_kappa=1e-3),
}

N_MAX_DEFAULT = 15
N_MAX_STEP = 5
N_MAX_CAP = 40


class NoCrossingError(Exception):
    """The inversion never reached zero within the integrated horizon."""

    def __init__(self, horizon: float):
        self.horizon = horizon
        super().__init__(f"no inversion zero-crossing within t = {horizon:.6g}")


def default_g_grid(points: int = 60, lo: float = 1e-3, hi: float = 1e2) -> np.ndarray:
    """Log-spaced coupling grid spanning the weak, transient and strong regions."""
    return np.geomspace(lo, hi, points)


def find_tstar(traj: Trajectory, sz_tol: float = 1e-6) -> float:
    """First time the inversion reaches zero, from a grid bracket refined by
    bisection on the dense output until |<sigma_z>(t*)| < sz_tol."""
    sz = traj.sigma_z()
    if sz[0] < 1.0 - 1e-8:
        raise ValueError(f"trajectory must start from the excited state, <sigma_z>(0) = {sz[0]:.6g}")
    bracket = None
    for i in range(len(sz) - 1):
        if sz[i] == 0.0:
            return float(traj.times[i])
        if sz[i] > 0.0 >= sz[i + 1]:
            bracket = i
            break
    if bracket is None:
        raise NoCrossingError(float(traj.times[-1]))

    w = sigma_z_weights(traj.dim)

    def sz_at(t: float) -> float:
        return float(np.real(np.dot(w, np.einsum("ii->i", traj.interpolate(t)))))

    lo, hi = float(traj.times[bracket]), float(traj.times[bracket + 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = sz_at(mid)
        if abs(val) < sz_tol:
            return mid
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(f"bisection for t* did not reach |<sigma_z>| < {sz_tol:g}")  # pragma: no cover


# --------------------------------------------------------------------------
# fig. 1: time series in the two extreme regimes


@dataclass
class Fig1Result:
    regime: str
    params: SystemParams
    trajectory: Trajectory
    samples: list[FluxSample]
    metadata: dict

    @property
    def gt(self) -> np.ndarray:
        return np.array([s.t for s in self.samples]) * self.params.g


def run_fig1(
    regime: str,
    gt_max: float = math.pi,
    samples: int = 401,
    kappa: float = 1.0,
    n_max: int = N_MAX_DEFAULT,
    tol: float = 1e-9,
) -> Fig1Result:
    """Displaced-picture evolution from |e,0> sampled on a uniform gt grid.

    ``b_d`` is the classical-rotation regime (g = 1e-3 kappa, eps = kappa);
    ``c_e`` the entangling regime (g = kappa, eps = 1e-3 kappa). The gt range
    is a reproduction parameter, not a physical one; it is recorded in the
    metadata.
    """
    if regime not in FIG1_REGIMES:
        raise ValueError(f"regime must be one of {sorted(FIG1_REGIMES)}, got {regime!r}")
    if samples < 400:
        raise ValueError(f"need at least 400 samples, got {samples}")
    spec = FIG1_REGIMES[regime]
    params = SystemParams(
        g=spec["g_over_kappa"] * kappa,
        eps=spec["eps_over_kappa"] * kappa,
        kappa=kappa,
        gamma=0.0,
        n_max=n_max,
        picture=Picture.DISPLACED,
    )
    t_end = gt_max / params.g
    traj = evolve(build_generator(params), excited_vacuum_density(n_max), t_end, tol=tol)
    grid = np.linspace(0.0, t_end, samples)
    flux = [flux_sample(t, traj.interpolate(t), params) for t in grid]
    return Fig1Result(
        regime=regime,
        params=params,
        trajectory=traj,
        samples=flux,
        metadata=dict(regime=regime, gt_max=gt_max, samples=samples, kappa=kappa,
                      gamma=0.0, n_max=n_max, tol=tol),
    )


# --------------------------------------------------------------------------
# figs. 2-3: coupling sweeps at fixed drive


@dataclass(frozen=True)
class SweepTask:
    g: float
    eps: float
    kappa: float
    gamma: float
    n_max: int
    n_max_cap: int
    tol: float
    tstar_tol: float
    gate_tol: float
    horizon_factor: float
    n_probes: int
    apply_gate: bool


@dataclass
class SweepRow:
    """Observables of one grid point, sampled at the inversion null."""

    g_over_kappa: float
    t_star: float | None
    entropy: float | None  # nats
    jw_norm: float | None
    jq_norm: float | None
    n_flux: float | None
    sigma_z_residual: float | None
    energy_residual: float | None
    n_max_used: int
    gate_drift: float | None
    converged: bool
    note: str = ""

    @property
    def entropy_norm(self) -> float | None:
        from .hilbert import LN2

        return None if self.entropy is None else self.entropy / LN2


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict


@dataclass
class _PointRun:
    t_star: float | None
    entropy: float | None
    jw_norm: float | None
    jq_norm: float | None
    n_flux: float | None
    sigma_z_residual: float | None
    energy_residual: float | None


def _horizon_scale(task: SweepTask) -> float:
    return max(
        math.pi * task.kappa / (4.0 * task.eps * task.g) if task.eps > 0 else 0.0,
        math.pi / (4.0 * task.g),
    )


def _run_point(task: SweepTask, n_max: int) -> _PointRun:
    params = SystemParams(
        g=task.g, eps=task.eps, kappa=task.kappa, gamma=task.gamma,
        n_max=n_max, picture=Picture.DISPLACED,
    )
    gen = build_generator(params)
    rho0 = excited_vacuum_density(n_max)
    t_max = task.horizon_factor * _horizon_scale(task)

    t_star = locate_inversion_zero(gen, rho0, t_max, tol=task.tol)
    if t_star is None:
        return _PointRun(None, None, None, None, None, None, None)

    # probe grid for the energy-balance check: log-spaced centres (dense in
    # the early transient where the curvature lives) with FD stencils of half
    # width h = (local spacing)/2, every state an exact integration endpoint
    # (chained restarts, no interpolation)
    k = task.n_probes
    probe_grid = np.concatenate(
        [[0.0], np.geomspace(t_star / 256.0, t_star * k / (k + 1), k), [t_star]]
    )
    hs = stencil_half_widths(probe_grid)
    centers = probe_grid[1:-1]
    cluster = np.concatenate(
        [np.stack([c - h, c - 0.5 * h, c, c + 0.5 * h, c + h]) for c, h in zip(centers, hs)]
    )
    chain_times = np.unique(np.append(cluster, t_star))
    states = integrate_chain(gen, rho0, chain_times, tol=task.tol)
    lookup = {t: states[i] for i, t in enumerate(chain_times)}
    rho_star = states[-1]

    w = sigma_z_weights(gen.dim)
    rho_at = partial_trace_field(rho_star)
    sz_res = abs(float(np.real(np.dot(w, np.einsum("ii->i", rho_star)))))
    residual = energy_balance_on_states(
        probe_grid, lambda t: lookup[t], params, w, h=hs
    )
    return _PointRun(
        t_star=t_star,
        entropy=von_neumann_entropy(rho_at),
        jw_norm=work_flux_norm(rho_at, params),
        jq_norm=heat_flux_norm_full(rho_star, params),
        n_flux=(task.eps * t_star) ** 2,
        sigma_z_residual=sz_res,
        energy_residual=residual,
    )


def _gate_drift(a: _PointRun, b: _PointRun) -> float:
    """Largest observable drift between two cutoffs; inf when only one run
    found a crossing. Photon counts compare relatively (they scale like
    t*^2 and absolute drift below 1e-6 is not representable)."""
    if a.t_star is None and b.t_star is None:
        return 0.0
    if a.t_star is None or b.t_star is None:
        return math.inf
    drifts = [
        abs(a.t_star - b.t_star),
        abs(a.entropy - b.entropy),
        abs(a.jw_norm - b.jw_norm),
        abs(a.jq_norm - b.jq_norm),
        abs(a.n_flux - b.n_flux) / max(1.0, abs(a.n_flux)),
    ]
    return max(drifts)


def _sweep_point(task: SweepTask) -> SweepRow:
    n_max = task.n_max
    run = _run_point(task, n_max)
    gate_drift = None
    converged = False
    note = ""
    if task.apply_gate:
        while True:
            comparison = _run_point(task, n_max + N_MAX_STEP)
            gate_drift = _gate_drift(run, comparison)
            if gate_drift < task.gate_tol:
                converged = True
                break
            if n_max + N_MAX_STEP >= task.n_max_cap:
                run = comparison
                n_max += N_MAX_STEP
                note = f"truncation gate unresolved at n_max cap {task.n_max_cap}"
                break
            n_max += N_MAX_STEP
            run = comparison
    if run.t_star is None:
        note = note or f"no inversion crossing within horizon {task.horizon_factor * _horizon_scale(task):.6g}"
        converged = False
    elif converged:
        converged = run.sigma_z_residual < task.tstar_tol
    return SweepRow(
        g_over_kappa=task.g / task.kappa,
        t_star=run.t_star,
        entropy=run.entropy,
        jw_norm=run.jw_norm,
        jq_norm=run.jq_norm,
        n_flux=run.n_flux,
        sigma_z_residual=run.sigma_z_residual,
        energy_residual=run.energy_residual,
        n_max_used=n_max,
        gate_drift=gate_drift,
        converged=converged,
        note=note,
    )


def _run_sweep(tasks: list[SweepTask], workers: int | None) -> list[SweepRow]:
    workers = workers or 1
    if workers <= 1 or len(tasks) <= 1:
        return [_sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, tasks))


def run_fig2(
    eps_over_kappa: float,
    g_grid: np.ndarray | None = None,
    kappa: float = 1.0,
    gamma: float = 0.0,
    n_max: int = N_MAX_DEFAULT,
    n_max_cap: int = N_MAX_CAP,
    tol: float = 1e-9,
    tstar_tol: float = 1e-6,
    gate_tol: float = 1e-6,
    horizon_factor: float = 20.0,
    n_probes: int = 16,
    workers: int | None = None,
    apply_gate: bool = True,
) -> SweepResult:
    """Sweep the coupling at fixed drive: per point, evolve the full model
    from |e,0> until the inversion null and record the fluxes and entropy
    there."""
    if eps_over_kappa < 0:
        raise ValueError(f"eps_over_kappa must be >= 0, got {eps_over_kappa}")
    if g_grid is None:
        g_grid = default_g_grid()
    g_grid = np.asarray(g_grid, dtype=float)
    if np.any(g_grid <= 0) or np.any(np.diff(g_grid) <= 0):
        raise ValueError("g_grid must be positive and strictly ascending")
    tasks = [
        SweepTask(
            g=float(g) * kappa, eps=eps_over_kappa * kappa, kappa=kappa, gamma=gamma,
            n_max=n_max, n_max_cap=n_max_cap, tol=tol, tstar_tol=tstar_tol,
            gate_tol=gate_tol, horizon_factor=horizon_factor, n_probes=n_probes,
            apply_gate=apply_gate,
        )
        for g in g_grid
    ]
    rows = _run_sweep(tasks, workers)
    meta = dict(
        eps=eps_over_kappa, kappa=kappa, gamma=gamma, grid_points=len(g_grid),
        g_min=float(g_grid[0]), g_max=float(g_grid[-1]), n_max=n_max,
        n_max_cap=n_max_cap, tol=tol, tstar_tol=tstar_tol, gate_tol=gate_tol,
        horizon_factor=horizon_factor, apply_gate=apply_gate,
        n_max_used_max=max(r.n_max_used for r in rows),
    )
    return SweepResult(rows=rows, metadata=meta)


def run_fig3(
    g_grid: np.ndarray | None = None,
    kappa: float = 1.0,
    **kwargs,
) -> SweepResult:
    """Photon-throughput sweep: drive fixed at eps = kappa so the steady
    intra-cavity photon number is one, photon flux recorded at the inversion
    null."""
    result = run_fig2(1.0, g_grid=g_grid, kappa=kappa, **kwargs)
    result.metadata["pipeline"] = "fig3"
    return result
