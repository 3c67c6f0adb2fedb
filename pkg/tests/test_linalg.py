import numpy as np
import pytest
from scipy.linalg import expm, logm

from src.errors import DomainError, SingularityError
from src.linalg import (
    Subsystem,
    commutator,
    eig_hermitian,
    expm_skew,
    identity,
    is_density_matrix,
    kron,
    matrix_log2,
    partial_trace,
    sample_haar_unitaries,
    sample_haar_unitary,
    sample_random_density,
    unitarity_defect,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _check_eigen(m, eig):
    v = eig.eigenvectors
    assert np.linalg.norm(eig.reconstruct() - m) <= 1e-10
    assert np.linalg.norm(v.conj().T @ v - np.eye(len(m))) <= 1e-10
    assert np.all(np.diff(eig.eigenvalues) <= 0.0)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
class TestEigHermitian:
    def test_identity(self, method):
        eig = eig_hermitian(identity(2), method=method)
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 1.0])
        _check_eigen(identity(2), eig)

    def test_diagonal_is_sorted(self, method):
        eig = eig_hermitian(np.diag([0.3, 0.7]), method=method)
        np.testing.assert_allclose(eig.eigenvalues, [0.7, 0.3])

    def test_pauli_x(self, method):
        eig = eig_hermitian(PAULI_X, method=method)
        np.testing.assert_allclose(eig.eigenvalues, [1.0, -1.0], atol=1e-14)
        _check_eigen(PAULI_X, eig)

    @pytest.mark.parametrize("dim", [2, 3, 4, 8])
    def test_random_hermitian(self, method, dim, rng):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = g + g.conj().T
        _check_eigen(h, eig_hermitian(h, method=method))

    def test_rejects_non_square(self, method):
        with pytest.raises(DomainError, match="square"):
            eig_hermitian(np.zeros((2, 3)), method=method)

    def test_rejects_non_hermitian(self, method):
        with pytest.raises(DomainError, match="not Hermitian"):
            eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]), method=method)


def test_jacobi_matches_lapack(rng):
    for _ in range(20):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = g @ g.conj().T
        np.testing.assert_allclose(
            eig_hermitian(h, method="jacobi").eigenvalues,
            eig_hermitian(h).eigenvalues,
            atol=1e-10,
        )


def test_unknown_method():
    with pytest.raises(DomainError, match="unknown eigensolver"):
        eig_hermitian(identity(2), method="qr")


class TestMatrixLog2:
    def test_identity(self):
        np.testing.assert_allclose(matrix_log2(identity(3)), np.zeros((3, 3)), atol=1e-15)

    def test_half(self):
        np.testing.assert_allclose(matrix_log2(np.diag([0.5, 0.5])), -np.eye(2), atol=1e-15)

    def test_powers_of_two(self):
        np.testing.assert_allclose(matrix_log2(np.diag([4.0, 2.0])), np.diag([2.0, 1.0]), atol=1e-14)

    def test_matches_scipy(self, random_state):
        sigma = random_state(4)
        expected = logm(sigma) / np.log(2.0)
        np.testing.assert_allclose(matrix_log2(sigma), expected, atol=1e-9)

    def test_singular_raises(self):
        with pytest.raises(SingularityError) as info:
            matrix_log2(np.diag([1.0, 0.0]))
        assert info.value.min_eigenvalue == 0.0

    def test_commutes_with_argument(self, random_state):
        for dim in (2, 3, 4):
            m = random_state(dim)
            assert np.linalg.norm(commutator(m, matrix_log2(m))) <= 1e-10


def test_expm_skew_matches_scipy(rng):
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    k = 0.5 * (g - g.conj().T)
    u = expm_skew(k)
    np.testing.assert_allclose(u, expm(k), atol=1e-12)
    assert unitarity_defect(u) <= 1e-12


class TestKron:
    def test_identities(self):
        np.testing.assert_array_equal(kron(identity(2), identity(2)), identity(4))

    def test_projectors(self):
        p = np.diag([1.0, 0.0])
        np.testing.assert_array_equal(kron(p, p), np.diag([1.0, 0.0, 0.0, 0.0]))

    def test_pauli_x_identity(self):
        expected = np.zeros((4, 4))
        for i, j in [(0, 2), (1, 3), (2, 0), (3, 1)]:
            expected[i, j] = 1.0
        np.testing.assert_array_equal(kron(PAULI_X, identity(2)), expected)


class TestPartialTrace:
    def test_bell_margins_are_mixed(self, bell_state):
        for keep in Subsystem:
            np.testing.assert_allclose(partial_trace(bell_state, 2, 2, keep=keep), np.eye(2) / 2, atol=1e-15)

    def test_product_factorises(self, random_state):
        rho_a, rho_b = random_state(2), random_state(3)
        rho = kron(rho_a, rho_b)
        np.testing.assert_allclose(partial_trace(rho, 2, 3, keep=Subsystem.A), rho_a, atol=1e-14)
        np.testing.assert_allclose(partial_trace(rho, 2, 3, keep=Subsystem.B), rho_b, atol=1e-14)

    def test_unnormalised_factor_scales(self, random_state):
        a, b = random_state(2), 3.0 * random_state(3)
        np.testing.assert_allclose(partial_trace(kron(a, b), 2, 3, keep=Subsystem.A), 3.0 * a, atol=1e-13)
        np.testing.assert_allclose(partial_trace(kron(a, b), 2, 3, keep=Subsystem.B), b, atol=1e-13)

    def test_diagonal_block_sums(self):
        rho = np.diag([0.4, 0.3, 0.2, 0.1])
        np.testing.assert_allclose(partial_trace(rho, 2, 2, keep=Subsystem.A), np.diag([0.7, 0.3]))
        np.testing.assert_allclose(partial_trace(rho, 2, 2, keep=Subsystem.B), np.diag([0.6, 0.4]))

    def test_shape_mismatch(self):
        with pytest.raises(DomainError, match="4x4"):
            partial_trace(np.eye(3), 2, 2)


class TestHaar:
    def test_dim_one_is_phase(self, rng):
        u = sample_haar_unitary(1, rng)
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1.0) <= 1e-12

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_unitary(self, dim, rng):
        for u in sample_haar_unitaries(dim, 50, rng):
            assert unitarity_defect(u) <= 1e-10

    def test_second_moment(self, rng):
        us = sample_haar_unitaries(4, 100_000, rng)
        assert abs(np.mean(np.abs(us[:, 0, 0]) ** 2) - 0.25) <= 0.01

    def test_mean_trace_vanishes(self, rng):
        us = sample_haar_unitaries(4, 100_000, rng)
        assert abs(np.mean(np.trace(us, axis1=1, axis2=2))) <= 0.02

    def test_rejects_zero_dim(self, rng):
        with pytest.raises(DomainError):
            sample_haar_unitary(0, rng)


class TestRandomDensity:
    def test_dim_one(self, rng):
        np.testing.assert_allclose(sample_random_density(1, rng), [[1.0]])

    @pytest.mark.parametrize("dim", [2, 4])
    def test_is_state(self, dim, rng):
        for _ in range(50):
            rho = sample_random_density(dim, rng)
            assert abs(np.trace(rho) - 1.0) <= 1e-12
            assert np.linalg.eigvalsh(rho)[0] >= -1e-12
            assert is_density_matrix(rho)

    def test_mean_eigenvalue(self, rng):
        values = [np.linalg.eigvalsh(sample_random_density(4, rng)) for _ in range(2000)]
        assert abs(np.mean(values) - 0.25) <= 0.01

    def test_full_rank_floor(self, rng):
        for _ in range(20):
            rho = sample_random_density(4, rng, require_full_rank=True, floor=1e-3)
            assert np.linalg.eigvalsh(rho)[0] > 1e-3


def test_is_density_matrix_rejects():
    assert not is_density_matrix(np.diag([1.0, 1.0]))
    assert not is_density_matrix(np.diag([1.5, -0.5]))
    assert not is_density_matrix(np.zeros((2, 3)))
