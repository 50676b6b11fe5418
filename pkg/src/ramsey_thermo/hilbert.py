"""Truncated Fock-space and qubit operators, composite-space helpers, entropy.

Conventions, fixed across the package:

- atomic basis ordered (|e>, |g|), so ``sigma_z = diag(+1, -1)`` and
  ``sigma_plus = |e><g|``;
- field basis (|0>, ..., |n_max>), field dimension ``n_max + 1``;
- composite operators are Kronecker products with the atom factor leftmost;
- every operator is a dense complex ``numpy`` array.

Entropies are in nats; figure pipelines normalise by ln 2 where needed.
"""

from __future__ import annotations

import warnings

import numpy as np

LN2 = float(np.log(2.0))

# Density-matrix invariant tolerances.
TRACE_TOL = 1e-8
HERM_TOL = 1e-10
POS_TOL = 1e-8


class InvariantViolation(Exception):
    """A state or operator broke a structural invariant (trace, Hermiticity,
    positivity, or finiteness)."""


def fock_lowering(n_max: int) -> np.ndarray:
    """Annihilation operator on the truncated field space.

    Entries ``a[n-1, n] = sqrt(n)``; the raising operator is the conjugate
    transpose. ``n_max`` is the highest retained Fock level.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1).astype(complex)


def qubit_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (sigma_plus, sigma_minus, sigma_z) in the (|e>, |g>) basis."""
    sp = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    return sp, sp.conj().T, np.diag([1.0, -1.0]).astype(complex)


SIGMA_PLUS, SIGMA_MINUS, SIGMA_Z = qubit_operators()


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the atom factor first."""
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise ValueError("tensor expects square operators")
    return np.kron(a, b)


def field_dim_of(rho: np.ndarray) -> int:
    """Field dimension of a composite-space matrix (dim = 2 * field_dim)."""
    d = rho.shape[0]
    if rho.shape != (d, d) or d < 4 or d % 2:
        raise ValueError(f"not a composite-space matrix: shape {rho.shape}")
    return d // 2


def partial_trace_field(rho: np.ndarray) -> np.ndarray:
    """Trace out the field, returning the 2x2 reduced atomic matrix.

    Rejects matrices already on the atom-only space.
    """
    nf = field_dim_of(rho)
    return np.einsum("imjm->ij", rho.reshape(2, nf, 2, nf))


def displacement(alpha: complex, n_max: int) -> np.ndarray:
    """Displacement operator exp(alpha a^dag - alpha^* a) on the truncated space.

    Computed by matrix exponential so it is consistent with every other
    operator at the same cutoff; approximately unitary as long as
    |alpha|^2 << n_max (a warning is emitted when truncation is stressed).
    """
    from scipy.linalg import expm

    if abs(alpha) ** 2 > 0.25 * n_max:
        warnings.warn(
            f"displacement |alpha|^2 = {abs(alpha)**2:.3g} is not small against "
            f"n_max = {n_max}; truncation error may be significant",
            stacklevel=2,
        )
    a = fock_lowering(n_max)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def vacuum_state(n_max: int) -> np.ndarray:
    """|0> on the truncated field space."""
    v = np.zeros(n_max + 1, dtype=complex)
    v[0] = 1.0
    return v


def coherent_state(alpha: complex, n_max: int) -> np.ndarray:
    """Coherent state D(alpha)|0> at the given cutoff."""
    return displacement(alpha, n_max) @ vacuum_state(n_max)


def excited_vacuum_density(n_max: int) -> np.ndarray:
    """|e,0><e,0| on the composite space."""
    d = 2 * (n_max + 1)
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def atom_excited_density() -> np.ndarray:
    """|e><e| on the atom-only space."""
    return np.diag([1.0, 0.0]).astype(complex)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-tr(rho ln rho) in nats, with eigenvalues clamped to [0, 1] and the
    convention 0 ln 0 = 0."""
    lam = np.clip(np.linalg.eigvalsh(rho).real, 0.0, 1.0)
    lam = lam[lam > 0.0]
    return float(-(lam * np.log(lam)).sum())


def validate_density_matrix(
    rho: np.ndarray,
    trace_tol: float = TRACE_TOL,
    herm_tol: float = HERM_TOL,
    pos_tol: float = POS_TOL,
    where: str = "",
) -> None:
    """Raise InvariantViolation unless rho is finite, Hermitian, unit-trace
    and positive within the given tolerances."""
    tag = f" ({where})" if where else ""
    if not np.all(np.isfinite(rho.view(float))):
        raise InvariantViolation(f"non-finite entries in density matrix{tag}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise InvariantViolation(f"Hermiticity defect {herm:.3e} > {herm_tol:.1e}{tag}")
    tr = rho.trace()
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolation(f"trace defect |{tr:.12g} - 1| > {trace_tol:.1e}{tag}")
    lam_min = np.linalg.eigvalsh(rho)[0].real
    if lam_min < -pos_tol:
        raise InvariantViolation(f"negative eigenvalue {lam_min:.3e} < -{pos_tol:.1e}{tag}")
