import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramsey_thermo.hilbert import (
    LN2,
    InvariantViolation,
    coherent_state,
    displacement,
    excited_vacuum_density,
    fock_lowering,
    partial_trace_field,
    qubit_operators,
    tensor,
    validate_density_matrix,
    von_neumann_entropy,
)

from conftest import bloch_density, random_density

SP, SM, SZ = qubit_operators()


class TestFockLowering:
    def test_single_excitation(self):
        a = fock_lowering(1)
        assert a[0, 1] == 1.0

    def test_sqrt_entries(self):
        a = fock_lowering(4)
        assert a[3, 4] == 2.0
        for n in range(1, 5):
            assert a[n - 1, n] == pytest.approx(np.sqrt(n))

    def test_vacuum_annihilated(self):
        a = fock_lowering(5)
        assert np.all(a[:, 0] == 0)

    def test_number_operator_diagonal(self):
        a = fock_lowering(7)
        n_op = a.conj().T @ a
        assert np.array_equal(n_op, np.diag(np.arange(8.0)))

    def test_rejects_zero_cutoff(self):
        with pytest.raises(ValueError):
            fock_lowering(0)

    def test_finite(self):
        assert np.all(np.isfinite(fock_lowering(30).view(float)))


class TestQubitOperators:
    def test_sigma_z_excited_eigenvalue(self):
        e = np.array([1.0, 0.0])
        assert np.allclose(SZ @ e, e)

    def test_projector_identity(self):
        assert np.allclose(SP @ SM, np.diag([1.0, 0.0]))

    def test_commutator_is_sigma_z(self):
        assert np.allclose(SP @ SM - SM @ SP, SZ)


class TestTensor:
    def test_identities(self):
        assert np.array_equal(tensor(np.eye(2), np.eye(3)), np.eye(6))

    def test_sigma_z_on_excited_vacuum(self):
        op = tensor(SZ, np.eye(4, dtype=complex))
        vec = np.zeros(8)
        vec[0] = 1.0  # |e,0>
        assert np.allclose(op @ vec, vec)

    def test_trace_multiplicativity(self, rng):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.trace(tensor(a, b)) == pytest.approx(np.trace(a) * np.trace(b))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            tensor(np.ones((2, 3)), np.eye(2))


class TestPartialTrace:
    def test_product_state(self):
        rho = excited_vacuum_density(3)
        assert np.allclose(partial_trace_field(rho), np.diag([1.0, 0.0]))

    def test_maximally_entangled_state_reduces_to_mixed(self):
        # (|e,0> - i|g,1>)/sqrt(2) on n_max = 3
        psi = np.zeros(8, dtype=complex)
        psi[0] = 1 / np.sqrt(2)
        psi[5] = -1j / np.sqrt(2)
        rho_at = partial_trace_field(np.outer(psi, psi.conj()))
        assert np.allclose(rho_at, np.eye(2) / 2, atol=1e-14)

    def test_expectation_consistency(self, rng):
        rho = random_density(rng, 8)
        rho_at = partial_trace_field(rho)
        assert rho_at.trace() == pytest.approx(1.0)
        sz_full = np.trace(tensor(SZ, np.eye(4, dtype=complex)) @ rho)
        assert np.trace(SZ @ rho_at) == pytest.approx(sz_full, abs=1e-12)

    def test_linearity(self, rng):
        r1, r2 = random_density(rng, 6), random_density(rng, 6)
        a, b = 0.3, 0.7
        lhs = partial_trace_field(a * r1 + b * r2)
        rhs = a * partial_trace_field(r1) + b * partial_trace_field(r2)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_hermiticity_preserved(self, rng):
        rho_at = partial_trace_field(random_density(rng, 10))
        assert np.abs(rho_at - rho_at.conj().T).max() < 1e-14

    def test_rejects_atom_only_input(self):
        with pytest.raises(ValueError):
            partial_trace_field(np.eye(2, dtype=complex) / 2)


class TestDisplacement:
    def test_zero_is_identity(self):
        assert np.allclose(displacement(0.0, 10), np.eye(11), atol=1e-14)

    def test_coherent_mean_photon_number(self):
        alpha = 0.5j
        state = coherent_state(alpha, 20)
        a = fock_lowering(20)
        mean_n = state.conj() @ (a.conj().T @ a) @ state
        assert abs(mean_n - abs(alpha) ** 2) < 1e-6

    @settings(max_examples=25, deadline=None)
    @given(
        re=st.floats(-0.7, 0.7, allow_nan=False),
        im=st.floats(-0.7, 0.7, allow_nan=False),
    )
    def test_unitary_under_truncation(self, re, im):
        d = displacement(re + 1j * im, 20)
        assert np.abs(d.conj().T @ d - np.eye(21)).max() < 1e-8

    def test_warns_when_truncation_stressed(self):
        with pytest.warns(UserWarning, match="truncation"):
            displacement(3.0, 4)


class TestEntropy:
    def test_pure_state(self):
        assert von_neumann_entropy(np.diag([1.0, 0.0]).astype(complex)) == 0.0

    def test_maximally_mixed(self):
        assert von_neumann_entropy(np.eye(2, dtype=complex) / 2) == pytest.approx(LN2)

    def test_biased_mixture(self):
        # oracle: -(0.9 ln 0.9 + 0.1 ln 0.1)
        rho = np.diag([0.9, 0.1]).astype(complex)
        assert von_neumann_entropy(rho) == pytest.approx(0.3250829733914482, abs=1e-14)

    def test_clamps_slightly_negative_eigenvalues(self):
        rho = np.diag([1.0 + 5e-10, -5e-10]).astype(complex)
        s = von_neumann_entropy(rho)
        assert 0.0 <= s < 1e-8

    @settings(max_examples=50, deadline=None)
    @given(
        r=st.floats(0.0, 1.0, allow_nan=False),
        theta=st.floats(0.0, np.pi, allow_nan=False),
        phi=st.floats(0.0, 2 * np.pi, allow_nan=False),
    )
    def test_bounds_on_qubit_states(self, r, theta, phi):
        rho = bloch_density(
            r * np.sin(theta) * np.cos(phi),
            r * np.sin(theta) * np.sin(phi),
            r * np.cos(theta),
        )
        s = von_neumann_entropy(rho)
        assert -1e-9 <= s <= LN2 + 1e-9


class TestValidation:
    def test_accepts_valid_state(self, rng):
        validate_density_matrix(random_density(rng, 6))

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.5, 0.1], [0.0, 0.5]], dtype=complex)
        with pytest.raises(InvariantViolation, match="Hermiticity"):
            validate_density_matrix(bad)

    def test_rejects_wrong_trace(self):
        with pytest.raises(InvariantViolation, match="trace"):
            validate_density_matrix(np.eye(2, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        bad = np.diag([1.2, -0.2]).astype(complex)
        with pytest.raises(InvariantViolation, match="negative"):
            validate_density_matrix(bad)

    def test_rejects_nan(self):
        bad = np.diag([np.nan, 1.0]).astype(complex)
        with pytest.raises(InvariantViolation, match="finite"):
            validate_density_matrix(bad)
