"""Lindblad generators for the three pictures and master-equation integration.

The master equation is ``drho/dt = -i[H, rho] + sum_j r_j L_{c_j}(rho)`` with
the factor-2 dissipator ``L_c(rho) = 2 c rho c^dag - c^dag c rho - rho c^dag c``,
so a field amplitude decays at rate ``kappa`` and the steady displaced
amplitude under a resonant drive is ``-i eps / kappa``.

Pictures
--------
ROTATING_LAB
    ``H = g (sp (x) a + sm (x) a^dag) + eps (I (x) (a + a^dag))`` with collapse
    terms ``(kappa, I (x) a)`` and ``(gamma, sm (x) I)``.
DISPLACED
    Same Jaynes-Cummings coupling plus the classical drive
    ``(alpha g sp + alpha^* g sm) (x) I`` with ``alpha = -i eps / kappa``; the
    cavity drive has been absorbed into the frame, the field starts near
    vacuum.
EFFECTIVE_ATOM
    Atom-only 2x2 model after adiabatic elimination of the field:
    ``H = -i (eps g / kappa)(sp - sm)`` and a single collapse term
    ``(g^2/kappa + gamma, sm)``.

Time is measured in units of ``1/kappa`` (``kappa = 1`` in all shipped
pipelines); the equations below keep ``kappa`` explicit so scaled runs remain
possible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    InvariantViolation,
    fock_lowering,
    tensor,
    validate_density_matrix,
)

TOL_MIN, TOL_MAX = 1e-12, 1e-4


class Picture(enum.Enum):
    ROTATING_LAB = "rotating_lab"
    DISPLACED = "displaced"
    EFFECTIVE_ATOM = "effective_atom"


class StiffnessError(Exception):
    """The adaptive integrator failed (typically step-size underflow)."""


@dataclass(frozen=True)
class SystemParams:
    """Physical rates (units of kappa), Fock cutoff and picture selector.

    ``eps`` is the cavity drive strength, ``g`` the atom-field coupling,
    ``gamma`` the atomic decay rate. ``kappa`` must be positive whenever the
    displaced or effective picture is used with a nonzero drive, because the
    displaced amplitude ``-i eps / kappa`` and the effective decay
    ``g^2/kappa + gamma`` are undefined at ``kappa = 0``.
    """

    g: float
    eps: float
    kappa: float = 1.0
    gamma: float = 0.0
    n_max: int = 15
    picture: Picture = Picture.DISPLACED

    def __post_init__(self):
        for name in ("g", "eps", "kappa", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.kappa == 0.0:
            if self.picture is Picture.EFFECTIVE_ATOM:
                raise ValueError("effective picture requires kappa > 0")
            if self.picture is Picture.DISPLACED and self.eps != 0.0:
                raise ValueError("displaced picture requires kappa > 0 when eps > 0")

    @property
    def alpha(self) -> complex:
        """Displaced-frame amplitude -i eps / kappa (zero when eps = 0)."""
        if self.eps == 0.0:
            return 0.0 + 0.0j
        return -1j * self.eps / self.kappa

    @property
    def gamma_eff(self) -> float:
        """Effective atomic decay g^2/kappa + gamma after adiabatic elimination."""
        return self.g**2 / self.kappa + self.gamma

    @property
    def rabi_frequency(self) -> float:
        """Resonant rotation frequency 2 eps g / kappa of the eliminated model."""
        return 2.0 * self.eps * self.g / self.kappa

    @property
    def dim(self) -> int:
        return 2 if self.picture is Picture.EFFECTIVE_ATOM else 2 * (self.n_max + 1)


def jc_hamiltonian(g: float, n_max: int) -> np.ndarray:
    """Jaynes-Cummings coupling g (sp (x) a + sm (x) a^dag) on the composite space."""
    a = fock_lowering(n_max)
    return g * (tensor(SIGMA_PLUS, a) + tensor(SIGMA_MINUS, a.conj().T))


def classical_drive_hamiltonian(params: SystemParams) -> np.ndarray:
    """Displaced-frame classical drive (alpha g sp + alpha^* g sm) (x) I."""
    alpha = params.alpha
    h_at = alpha * params.g * SIGMA_PLUS + np.conj(alpha) * params.g * SIGMA_MINUS
    return tensor(h_at, np.eye(params.n_max + 1, dtype=complex))


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    """Right-hand-side map rho -> drho/dt for one picture and parameter set.

    ``collapse`` holds (rate, operator) pairs; rates multiply the factor-2
    dissipator. Immutable and shareable across threads.
    """

    hamiltonian: np.ndarray
    collapse: tuple[tuple[float, np.ndarray], ...]
    params: SystemParams
    # non-Hermitian drift H_eff = -iH - sum_j r_j c_j^dag c_j, precomputed so one
    # RHS evaluation costs 2 + 2*len(collapse) small matrix products
    _drift: np.ndarray = field(repr=False, default=None)
    _jumps: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def build_generator(params: SystemParams) -> LindbladGenerator:
    """Assemble the Lindblad generator for ``params.picture``."""
    nf = params.n_max + 1
    i_at = np.eye(2, dtype=complex)
    i_f = np.eye(nf, dtype=complex)

    if params.picture is Picture.ROTATING_LAB:
        a = fock_lowering(params.n_max)
        h = jc_hamiltonian(params.g, params.n_max)
        h += params.eps * tensor(i_at, a + a.conj().T)
        collapse = [(params.kappa, tensor(i_at, a)), (params.gamma, tensor(SIGMA_MINUS, i_f))]
    elif params.picture is Picture.DISPLACED:
        a = fock_lowering(params.n_max)
        h = jc_hamiltonian(params.g, params.n_max) + classical_drive_hamiltonian(params)
        collapse = [(params.kappa, tensor(i_at, a)), (params.gamma, tensor(SIGMA_MINUS, i_f))]
    elif params.picture is Picture.EFFECTIVE_ATOM:
        h = -1j * (params.eps * params.g / params.kappa) * (SIGMA_PLUS - SIGMA_MINUS)
        collapse = [(params.gamma_eff, SIGMA_MINUS)]
    else:  # pragma: no cover
        raise ValueError(f"unknown picture {params.picture}")

    collapse = tuple((r, c) for r, c in collapse if r > 0.0)
    herm = np.abs(h - h.conj().T).max()
    if herm > 1e-12:
        raise InvariantViolation(f"generator Hamiltonian not Hermitian: defect {herm:.3e}")

    drift = -1j * h
    jumps = []
    for r, c in collapse:
        drift -= r * (c.conj().T @ c)
        jumps.append((2.0 * r * c, np.ascontiguousarray(c.conj().T)))
    return LindbladGenerator(
        hamiltonian=h,
        collapse=collapse,
        params=params,
        _drift=drift,
        _jumps=tuple(jumps),
    )


def apply_generator(gen: LindbladGenerator, rho: np.ndarray) -> np.ndarray:
    """Evaluate drho/dt. The result is traceless and Hermiticity-preserving."""
    if rho.shape != (gen.dim, gen.dim):
        raise ValueError(f"state shape {rho.shape} does not match generator dim {gen.dim}")
    out = gen._drift @ rho
    out += rho @ gen._drift.conj().T
    for c2, ch in gen._jumps:
        out += (c2 @ rho) @ ch
    return out


def _rhs(gen: LindbladGenerator):
    d = gen.dim
    drift, drift_h = gen._drift, gen._drift.conj().T
    jumps = gen._jumps

    def rhs(t, y):
        rho = y.reshape(d, d)
        out = drift @ rho
        out += rho @ drift_h
        for c2, ch in jumps:
            out += (c2 @ rho) @ ch
        return out.reshape(-1)

    return rhs


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    """tr(op rho); imaginary part is numerical noise for Hermitian op."""
    if rho.shape != op.shape:
        raise ValueError(f"shape mismatch: state {rho.shape}, operator {op.shape}")
    return complex(np.einsum("ij,ji->", op, rho))


def sigma_z_weights(dim: int) -> np.ndarray:
    """Diagonal weights w with tr(sigma_z rho) = w . diag(rho) for either space."""
    if dim == 2:
        return np.array([1.0, -1.0])
    return np.kron(np.array([1.0, -1.0]), np.ones(dim // 2))


@dataclass
class Trajectory:
    """Time-ordered states with dense output at full integration accuracy.

    States are stored at the integrator's accepted steps, where they carry no
    interpolation error. ``interpolate`` evaluates rho(t) between grid points
    by a short re-integration from the nearest stored step at the same
    tolerance, so dense-output accuracy equals integration accuracy at any
    requested time (a low-order polynomial through the widely spaced steps of
    a high-order integrator would not achieve that).
    """

    times: np.ndarray
    states: np.ndarray  # shape (n_times, d, d)
    generator: LindbladGenerator
    tol: float = 1e-9
    method: str = "DOP853"

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def interpolate(self, t: float) -> np.ndarray:
        ts = self.times
        if not ts[0] <= t <= ts[-1]:
            raise ValueError(f"t = {t} outside trajectory range [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t, side="right") - 1)
        if i >= len(ts) - 1:
            return self.states[-1].copy()
        if t == ts[i]:
            return self.states[i].copy()
        sol = solve_ivp(
            _rhs(self.generator),
            (float(ts[i]), float(t)),
            self.states[i].reshape(-1),
            method=self.method,
            rtol=self.tol,
            atol=1e-3 * self.tol,
        )
        if not sol.success:  # pragma: no cover
            raise StiffnessError(f"dense-output re-integration failed: {sol.message}")
        return sol.y[:, -1].reshape(self.dim, self.dim)

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Dense-output states at the requested times."""
        return np.stack([self.interpolate(float(t)) for t in times])

    def expectations(self, op: np.ndarray) -> np.ndarray:
        """tr(op rho(t)) over the stored grid."""
        return np.einsum("ij,tji->t", op, self.states)

    def sigma_z(self) -> np.ndarray:
        w = sigma_z_weights(self.dim)
        return np.einsum("j,tjj->t", w, self.states).real


def _validate_tol(tol: float) -> None:
    if not TOL_MIN <= tol <= TOL_MAX:
        raise ValueError(f"tol must lie in [{TOL_MIN:g}, {TOL_MAX:g}], got {tol:g}")


def evolve(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    t_end: float,
    tol: float = 1e-9,
    method: str = "DOP853",
) -> Trajectory:
    """Integrate the master equation from t = 0 with adaptive error control.

    Uses an embedded Runge-Kutta pair (DOP853 by default) with
    ``rtol = tol`` and ``atol = tol/1000``; the tight absolute floor keeps
    the near-zero matrix elements accurate enough that state positivity
    holds well inside its tolerance even on long horizons, at no step-count
    cost (steps are stability-limited). States are stored at the accepted solver steps,
    where they carry no interpolation error; values between steps come from
    the trajectory's cubic-Hermite dense output. Every stored state is
    checked against the density-matrix invariants, with tolerances widened to
    10*tol when that is looser; a violation aborts. A solver failure
    (step-size underflow on a stiff problem) raises StiffnessError with the
    solver diagnostic.
    """
    _validate_tol(tol)
    if t_end <= 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    if rho0.shape != (gen.dim, gen.dim):
        raise ValueError(f"state shape {rho0.shape} does not match generator dim {gen.dim}")
    validate_density_matrix(rho0, where="evolve initial state")

    sol = solve_ivp(
        _rhs(gen),
        (0.0, float(t_end)),
        rho0.astype(complex).reshape(-1),
        method=method,
        rtol=tol,
        atol=1e-3 * tol,
    )
    if not sol.success:
        raise StiffnessError(
            f"integration failed after {sol.nfev} evaluations "
            f"(params {gen.params}): {sol.message}"
        )
    d = gen.dim
    states = np.ascontiguousarray(sol.y.T).reshape(-1, d, d)
    scale = 10.0 * tol
    for k, state in enumerate(states):
        validate_density_matrix(
            state,
            trace_tol=max(1e-8, scale),
            herm_tol=max(1e-10, scale),
            pos_tol=max(1e-8, scale),
            where=f"evolve output t={sol.t[k]:.6g}",
        )
    return Trajectory(times=sol.t, states=states, generator=gen, tol=tol, method=method)


def locate_inversion_zero(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    t_max: float,
    tol: float = 1e-9,
    method: str = "DOP853",
) -> float | None:
    """Time of the first downward zero-crossing of <sigma_z>, or None.

    Pure event location: integrates with a terminal event and discards the
    states, so nothing is stored along the way.
    """
    _validate_tol(tol)
    validate_density_matrix(rho0, where="initial state")
    d = gen.dim
    w = sigma_z_weights(d)
    diag = slice(0, d * d, d + 1)

    def crossing(t, y):
        return float(np.real(np.dot(w, y[diag])))

    crossing.terminal = True
    crossing.direction = -1

    sol = solve_ivp(
        _rhs(gen),
        (0.0, float(t_max)),
        rho0.astype(complex).reshape(-1),
        method=method,
        rtol=tol,
        atol=1e-3 * tol,
        t_eval=np.array([float(t_max)]),
        events=crossing,
    )
    if not sol.success and sol.status != 1:
        raise StiffnessError(
            f"integration failed after {sol.nfev} evaluations "
            f"(params {gen.params}): {sol.message}"
        )
    if sol.t_events[0].size == 0:
        return None
    return float(sol.t_events[0][0])


def integrate_chain(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    times: np.ndarray,
    tol: float = 1e-9,
    method: str = "DOP853",
) -> np.ndarray:
    """States at every requested time, each an exact solver endpoint.

    Integrates segment by segment through the sorted ``times`` (starting from
    t = 0), restarting the integrator at each requested point, so no value is
    interpolated. Every returned state is validated against the
    density-matrix invariants (widened to 10*tol when looser).
    """
    _validate_tol(tol)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] <= 0:
        raise ValueError("times must be strictly increasing and positive")
    validate_density_matrix(rho0, where="chain initial state")
    d = gen.dim
    rhs = _rhs(gen)
    y = rho0.astype(complex).reshape(-1)
    t_prev = 0.0
    out = np.empty((times.size, d, d), dtype=complex)
    for k, t in enumerate(times):
        sol = solve_ivp(rhs, (t_prev, float(t)), y, method=method, rtol=tol, atol=1e-3 * tol)
        if not sol.success:
            raise StiffnessError(
                f"integration failed after {sol.nfev} evaluations "
                f"(params {gen.params}): {sol.message}"
            )
        y = sol.y[:, -1]
        state = y.reshape(d, d)
        validate_density_matrix(
            state,
            trace_tol=max(1e-8, 10 * tol),
            herm_tol=max(1e-10, 10 * tol),
            pos_tol=max(1e-8, 10 * tol),
            where=f"chain state at t = {t:.6g}",
        )
        out[k] = state
        t_prev = float(t)
    return out


def evolve_to_inversion_zero(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    t_max: float,
    tol: float = 1e-9,
    t_eval: np.ndarray | None = None,
    method: str = "DOP853",
) -> tuple[float | None, np.ndarray | None, np.ndarray, np.ndarray]:
    """Integrate until <sigma_z> first crosses zero from above.

    Two passes: a terminal-event run locates the crossing time (the event
    time comes from root finding on the step interpolant and is accurate),
    then the interval [0, t*] is re-integrated in a chain through the
    requested ``t_eval`` points, so every returned state (the crossing state
    in particular) is a true solver endpoint rather than an interpolated
    value. Returns ``(t_star, rho_at_t_star, times, states)``; ``t_star`` is
    None when no downward crossing occurs before ``t_max``.
    """
    t_star = locate_inversion_zero(gen, rho0, t_max, tol=tol, method=method)
    if t_star is None:
        return None, None, np.zeros(0), np.zeros((0, gen.dim, gen.dim), complex)
    if t_eval is None:
        points = np.array([t_star])
    else:
        points = np.asarray(t_eval, dtype=float)
        points = np.unique(np.append(points[(points > 0.0) & (points < t_star)], t_star))
    states = integrate_chain(gen, rho0, points, tol=tol, method=method)
    return t_star, states[-1], points, states


def liouvillian_matrix(gen: LindbladGenerator) -> np.ndarray:
    """Dense superoperator L with vec(drho/dt) = L vec(rho), row-major vec."""
    d = gen.dim
    eye = np.eye(d, dtype=complex)
    h = gen.hamiltonian
    lmat = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for r, c in gen.collapse:
        ch = c.conj().T
        cdc = ch @ c
        lmat += r * (2.0 * np.kron(c, ch.T) - np.kron(cdc, eye) - np.kron(eye, cdc.T))
    return lmat


def evolve_expm(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    times: np.ndarray,
) -> Trajectory:
    """Fixed-step propagation by matrix exponential of the vectorized generator.

    Independent cross-check backend for ``evolve``: exact up to the dense
    ``expm`` accuracy, no step-size control involved. ``times`` must be an
    increasing grid starting at 0.
    """
    from scipy.linalg import expm

    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing and start at 0")
    validate_density_matrix(rho0, where="expm initial state")
    d = gen.dim
    lmat = liouvillian_matrix(gen)
    props: dict[float, np.ndarray] = {}
    y = rho0.astype(complex).reshape(-1)
    states = [rho0.astype(complex)]
    for dt in np.diff(times):
        key = round(float(dt), 15)
        if key not in props:
            props[key] = expm(lmat * dt)
        y = props[key] @ y
        states.append(y.reshape(d, d))
    return Trajectory(times=times, states=np.stack(states), generator=gen)
