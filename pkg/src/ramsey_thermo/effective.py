"""Closed-form results for the adiabatically eliminated atom-only model.

After eliminating the field, a resonantly driven damped qubit obeys the
linear Bloch system (Gamma = g^2/kappa + gamma, Omega = 2 eps g / kappa)

    d<sx>/dt =  Omega <sz> - Gamma <sx>
    d<sy>/dt =             - Gamma <sy>
    d<sz>/dt = -Omega <sx> - 2 Gamma (<sz> + 1)

solved here exactly through the matrix exponential of the augmented 4x4
constant-coefficient system. This path shares no code with the master-equation
integrator in ``dynamics`` and serves as its independent oracle.

The crossing condition between the flux magnitudes at the first null of the
inversion reduces to ``g = 2 eps Re<sigma_plus>(t*)``; because the Bloch
dynamics depends on (g, eps) only through the damping ratio
``Gamma/Omega = g/(2 eps)`` (for gamma = 0), the crossing coupling is exactly
linear in the drive strength.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .dynamics import Picture, SystemParams

CROSSING_WARN_FRACTION = 0.3  # warn when g_cross/kappa exceeds this


class RegimeError(Exception):
    """Bisection endpoints fall in the same crossing/no-crossing regime."""


@dataclass(frozen=True)
class CrossingResult:
    """Coupling at which the flux magnitudes meet at the inversion null."""

    eps_over_kappa: float
    g_cross_over_kappa: float
    re_sigma_plus_at_tstar: float
    t_star: float

    @property
    def balance_residual(self) -> float:
        """|g/eps - 2 Re<sigma_plus>(t*)|, relative to g/eps."""
        ratio = self.g_cross_over_kappa / self.eps_over_kappa
        return abs(ratio - 2.0 * self.re_sigma_plus_at_tstar) / ratio


def _bloch_matrix(omega_r: float, gamma_eff: float) -> np.ndarray:
    g2 = 2.0 * gamma_eff
    return np.array(
        [
            [-gamma_eff, 0.0, omega_r, 0.0],
            [0.0, -gamma_eff, 0.0, 0.0],
            [-omega_r, 0.0, -g2, -g2],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )


def bloch_vector(params: SystemParams, t: float) -> np.ndarray:
    """(<sx>, <sy>, <sz>) at time t, starting from the excited state."""
    m = _bloch_matrix(params.rabi_frequency, params.gamma_eff)
    return (expm(m * float(t)) @ np.array([0.0, 0.0, 1.0, 1.0]))[:3]


def damped_rabi_oracle(params: SystemParams, t: float) -> tuple[float, complex]:
    """(<sigma_z>, <sigma_plus>) of the eliminated model at time t.

    Exact constant-coefficient solution; independent of the adaptive
    integrator used elsewhere.
    """
    x, y, z = bloch_vector(params, t)
    return float(z), complex(0.5 * (x + 1j * y))


def effective_tstar(params: SystemParams) -> float:
    """First time the eliminated model's inversion reaches zero."""
    omega_r, gamma_eff = params.rabi_frequency, params.gamma_eff
    if omega_r == 0.0 and gamma_eff == 0.0:
        raise ValueError("no dynamics: both the drive and the damping vanish")
    # undamped quarter period or pure-decay half-life, whichever is sooner
    guesses = []
    if omega_r > 0:
        guesses.append(np.pi / (2.0 * omega_r))
    if gamma_eff > 0:
        guesses.append(np.log(2.0) / (2.0 * gamma_eff))
    scale = min(guesses)

    def sz(t):
        return bloch_vector(params, t)[2]

    hi = scale
    while sz(hi) > 0.0:
        hi *= 1.5
        if hi > 1e4 * scale:  # pragma: no cover - damping guarantees a crossing
            raise RuntimeError("inversion never crossed zero")
    return float(brentq(sz, 0.0, hi, xtol=1e-14, rtol=8.9e-16))


def crossing_point(
    eps_over_kappa: float,
    g_tol: float = 1e-4,
    kappa: float = 1.0,
) -> CrossingResult:
    """Coupling where |J_Q| = |J_W| at the inversion null, eliminated model.

    At t* the excited population is exactly 1/2, so the condition reduces to
    ``g = 2 eps Re<sigma_plus>(t*)``; the root is found by bisection on g to
    ``g_tol`` (in units of kappa). The result is quantitative only while
    the returned coupling stays well below kappa; a warning is emitted
    otherwise.
    """
    if eps_over_kappa <= 0:
        raise ValueError(f"eps_over_kappa must be > 0, got {eps_over_kappa}")
    eps = eps_over_kappa * kappa

    def imbalance(g: float) -> float:
        params = SystemParams(g=g, eps=eps, kappa=kappa, picture=Picture.EFFECTIVE_ATOM)
        t_star = effective_tstar(params)
        _, sp = damped_rabi_oracle(params, t_star)
        # |jq| - |jw| at t*: (g/kappa) - (2 eps/kappa) Re<sp>
        return (g - 2.0 * eps * sp.real) / kappa

    lo, hi = 1e-6 * eps, eps
    if imbalance(lo) >= 0 or imbalance(hi) <= 0:  # pragma: no cover
        raise RuntimeError("crossing bracket failed; imbalance did not change sign")
    while hi - lo > g_tol * kappa:
        mid = 0.5 * (lo + hi)
        if imbalance(mid) > 0:
            hi = mid
        else:
            lo = mid
    g_cross = 0.5 * (lo + hi)
    params = SystemParams(g=g_cross, eps=eps, kappa=kappa, picture=Picture.EFFECTIVE_ATOM)
    t_star = effective_tstar(params)
    _, sp = damped_rabi_oracle(params, t_star)
    if g_cross > CROSSING_WARN_FRACTION * kappa:
        warnings.warn(
            f"g_cross = {g_cross/kappa:.3f} kappa is not small against kappa; "
            "the eliminated model is unreliable here",
            stacklevel=2,
        )
    return CrossingResult(
        eps_over_kappa=eps_over_kappa,
        g_cross_over_kappa=g_cross / kappa,
        re_sigma_plus_at_tstar=float(sp.real),
        t_star=t_star,
    )


def sweep_has_crossing(rows) -> bool:
    """True when |jq| - |jw| changes sign across a sweep's populated rows."""
    diffs = [
        abs(row.jq_norm) - abs(row.jw_norm)
        for row in rows
        if row.t_star is not None
    ]
    if len(diffs) < 2:
        raise RegimeError("not enough populated sweep rows to classify the regime")
    signs = np.sign(diffs)
    return bool(np.any(signs[1:] != signs[:-1]))


def critical_drive(
    search_lo: float,
    search_hi: float,
    resolution: float = 0.05,
    g_grid: np.ndarray | None = None,
    n_max: int = 15,
    tol: float = 1e-9,
    workers: int | None = None,
    apply_gate: bool = False,
) -> float:
    """Drive strength separating the crossing and no-crossing regimes.

    Each candidate eps/kappa is classified by a full-model sweep over the
    coupling grid (default: 60 log-spaced points over [1e-3, 1e2]) and a scan
    for a sign change of |J_Q| - |J_W|; the threshold is bisected to
    ``resolution``. Raises RegimeError when both endpoints classify alike.
    """
    from .experiments import default_g_grid, run_fig2

    if not 0 < search_lo < search_hi:
        raise ValueError(f"need 0 < lo < hi, got ({search_lo}, {search_hi})")
    if g_grid is None:
        g_grid = default_g_grid()

    def crossing_at(eps: float) -> bool:
        sweep = run_fig2(
            eps, g_grid=g_grid, n_max=n_max, tol=tol, workers=workers, apply_gate=apply_gate
        )
        return sweep_has_crossing(sweep.rows)

    lo, hi = float(search_lo), float(search_hi)
    lo_crosses, hi_crosses = crossing_at(lo), crossing_at(hi)
    if lo_crosses == hi_crosses:
        regime = "crossing" if lo_crosses else "no-crossing"
        raise RegimeError(f"both endpoints ({lo}, {hi}) are in the {regime} regime")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if crossing_at(mid) == lo_crosses:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
