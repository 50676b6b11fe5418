"""Work flux, heat flux, energy balance and photon-flux bookkeeping.

The observable of interest is the bare atomic energy ``(omega/2) sigma_z``.
Its rate of change splits into a work channel, generated by the commutator
with the displaced-frame classical drive alone, and a heat channel, generated
by the Jaynes-Cummings coupling plus every dissipator. Both fluxes are
reported in the dimensionless form ``J / (hbar omega g)``; after that
normalisation the atomic frequency ``omega`` cancels exactly, so it is never
assigned a number anywhere in the package.

Closed forms used throughout (signs as produced, no modulus taken here):

- work:            ``J_W/(omega g) = -(2 eps / kappa) Re<sigma_plus>``
- heat, full:      ``J_Q/(omega g) = (1/g) tr((sigma_z/2) tr_f(heat part))``
- heat, effective: ``J_Q/(omega g) = -2 (g/kappa + gamma/g) <sigma_plus sigma_minus>``

The effective form keeps only the contributions that survive the
``g/omega -> 0`` limit; the sub-leading term of order ``g^3`` is dropped,
consistently with the normalised quantities being omega-free.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    LindbladGenerator,
    Picture,
    SystemParams,
    Trajectory,
    apply_generator,
    build_generator,
    expectation,
    jc_hamiltonian,
)
from .hilbert import (
    SIGMA_PLUS,
    SIGMA_Z,
    partial_trace_field,
    von_neumann_entropy,
)


@dataclass(frozen=True)
class FluxSample:
    """One time sample of the normalised fluxes and atomic observables."""

    t: float
    jw_norm: float
    jq_norm: float
    entropy: float  # nats
    sigma_z: float
    re_sigma_plus: float
    im_sigma_plus: float


@dataclass(frozen=True)
class PhotonAccounting:
    """Photons that crossed the cavity versus photons resident in it."""

    n_flux: float
    n_cav: float


def work_flux_norm(rho_at: np.ndarray, params: SystemParams) -> float:
    """Normalised work flux -(2 eps/kappa) Re<sigma_plus> of an atomic state.

    This is the rate of change of the bare atomic energy generated by the
    displaced-frame classical drive; the same expression is exact for both
    the full and the eliminated model.
    """
    if rho_at.shape != (2, 2):
        raise ValueError(f"expected a 2x2 atomic state, got shape {rho_at.shape}")
    re_sp = expectation(rho_at, SIGMA_PLUS).real
    return -(2.0 * params.eps / params.kappa) * re_sp


@functools.lru_cache(maxsize=64)
def _heat_generator(params: SystemParams) -> LindbladGenerator:
    """Generator holding only the heat channel: JC coupling + all dissipators."""
    heat_params = SystemParams(
        g=params.g,
        eps=0.0,  # drops the classical drive, keeps JC + dissipators
        kappa=params.kappa,
        gamma=params.gamma,
        n_max=params.n_max,
        picture=Picture.DISPLACED,
    )
    return build_generator(heat_params)


def heat_flux_norm_full(rho: np.ndarray, params: SystemParams) -> float:
    """Normalised heat flux of a composite displaced-picture state.

    Evaluates ``(1/g) tr((sigma_z/2) tr_f(-i[H_jc, rho] + dissipators(rho)))``,
    i.e. the sigma_z energy change from everything except the classical drive.
    """
    if params.picture is not Picture.DISPLACED:
        raise ValueError(f"heat_flux_norm_full requires the displaced picture, got {params.picture}")
    if params.g <= 0:
        raise ValueError("heat_flux_norm_full needs g > 0 for the 1/(omega g) normalisation")
    d = 2 * (params.n_max + 1)
    if rho.shape != (d, d):
        raise ValueError(f"state shape {rho.shape} does not match n_max = {params.n_max}")
    heat_part = partial_trace_field(apply_generator(_heat_generator(params), rho))
    return expectation(heat_part, SIGMA_Z).real / (2.0 * params.g)


def heat_flux_norm_effective(rho_at: np.ndarray, params: SystemParams) -> float:
    """Normalised heat flux of the atom-only model, -2(g/kappa + gamma/g) P_e."""
    if rho_at.shape != (2, 2):
        raise ValueError(f"expected a 2x2 atomic state, got shape {rho_at.shape}")
    if params.g <= 0:
        raise ValueError("heat_flux_norm_effective needs g > 0")
    p_e = rho_at[0, 0].real
    return -2.0 * (params.g / params.kappa + params.gamma / params.g) * p_e


def flux_sample(t: float, rho: np.ndarray, params: SystemParams) -> FluxSample:
    """FluxSample for one state: composite states use the full heat formula,
    atomic states the effective one."""
    if rho.shape == (2, 2):
        rho_at = rho
        jq = heat_flux_norm_effective(rho_at, params)
    else:
        rho_at = partial_trace_field(rho)
        jq = heat_flux_norm_full(rho, params)
    sp = expectation(rho_at, SIGMA_PLUS)
    return FluxSample(
        t=float(t),
        jw_norm=work_flux_norm(rho_at, params),
        jq_norm=jq,
        entropy=von_neumann_entropy(rho_at),
        sigma_z=expectation(rho_at, SIGMA_Z).real,
        re_sigma_plus=sp.real,
        im_sigma_plus=sp.imag,
    )


def flux_samples(traj: Trajectory, params: SystemParams) -> list[FluxSample]:
    """FluxSample at every stored trajectory time."""
    return [flux_sample(t, rho, params) for t, rho in zip(traj.times, traj.states)]


def _sigma_z_of(rho: np.ndarray, w: np.ndarray) -> float:
    return float(np.real(np.dot(w, np.einsum("ii->i", rho))))


def stencil_half_widths(times: np.ndarray) -> np.ndarray:
    """h = (local grid spacing)/2 for every interior point of a grid."""
    ts = np.asarray(times, dtype=float)
    return 0.5 * np.minimum(ts[1:-1] - ts[:-2], ts[2:] - ts[1:-1])


def energy_balance_on_states(
    times: np.ndarray,
    state_at,
    params: SystemParams,
    w: np.ndarray,
    h: np.ndarray | None = None,
) -> float:
    """Max residual of d<sigma_z/2>/dt / g = jw_norm + jq_norm over a grid.

    ``state_at`` maps a time to the state there at full accuracy. Around each
    interior grid time the derivative of <sigma_z> is taken by a centred
    finite-difference stencil of half width h = (local grid spacing)/2
    (overridable per point), so the check is independent of where the
    integrator placed its steps. The identity holds by construction of the
    flux split; the residual measures only discretisation noise.
    """
    ts = np.asarray(times, dtype=float)
    if len(ts) < 3:
        raise ValueError("energy balance needs at least 3 grid points")
    hs = stencil_half_widths(ts) if h is None else np.asarray(h, dtype=float)
    worst = 0.0
    for i in range(1, len(ts) - 1):
        h_i = float(hs[i - 1])
        dsz = (
            -_sigma_z_of(state_at(ts[i] + h_i), w)
            + 8.0 * _sigma_z_of(state_at(ts[i] + 0.5 * h_i), w)
            - 8.0 * _sigma_z_of(state_at(ts[i] - 0.5 * h_i), w)
            + _sigma_z_of(state_at(ts[i] - h_i), w)
        ) / (6.0 * h_i)
        sample = flux_sample(ts[i], state_at(ts[i]), params)
        worst = max(worst, abs(0.5 * dsz / params.g - (sample.jw_norm + sample.jq_norm)))
    return worst


def energy_balance(
    traj: Trajectory,
    params: SystemParams,
    times: np.ndarray | None = None,
) -> float:
    """Energy-balance residual of a trajectory on the given grid (defaults to
    the trajectory's own grid); see ``energy_balance_on_states``."""
    from .dynamics import sigma_z_weights

    return energy_balance_on_states(
        traj.times if times is None else times,
        traj.interpolate,
        params,
        sigma_z_weights(traj.dim),
    )


def photon_accounting(t: float, params: SystemParams) -> PhotonAccounting:
    """Photons crossing the cavity by time t, (eps t)^2, and the steady
    intra-cavity number (eps/kappa)^2; they satisfy n_flux = (kappa t)^2 n_cav."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return PhotonAccounting(
        n_flux=(params.eps * t) ** 2,
        n_cav=(params.eps / params.kappa) ** 2,
    )


def integrated_fluxes(samples: list[FluxSample]) -> tuple[float, float]:
    """Trapezoid time-integrals (W, Q) of the normalised fluxes.

    Diagnostic only; the shipped pipelines report instantaneous fluxes.
    """
    ts = np.array([s.t for s in samples])
    jw = np.array([s.jw_norm for s in samples])
    jq = np.array([s.jq_norm for s in samples])
    return float(np.trapezoid(jw, ts)), float(np.trapezoid(jq, ts))
