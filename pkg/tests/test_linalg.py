import numpy as np
import pytest

from app.src.core.lab_errors import NumericalError, ValidationError
from app.src.linalg import eigh_symmetric, qr_thin, ridge_inverse, svd_thin, svd_values
from app.src.tensorio import SplitMix64


def _random(rows: int, cols: int, seed: int) -> np.ndarray:
    return SplitMix64(seed).normals(rows * cols).reshape(rows, cols)


class TestQr:
    def test_orthonormal_input_is_its_own_factor(self):
        A = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        Q, R = qr_thin(A)
        assert np.allclose(Q, A)
        assert np.allclose(R, np.eye(2))

    def test_hand_oracle(self):
        Q, R = qr_thin([[3.0], [4.0]])
        assert np.allclose(Q, [[0.6], [0.8]])
        assert np.allclose(R, [[5.0]])

    def test_rank_deficient_still_reconstructs(self):
        A = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        Q, R = qr_thin(A)
        assert abs(R[1, 1]) < 1e-12
        assert np.allclose(Q @ R, A, atol=1e-12)

    def test_random_tall_matrix(self):
        A = _random(7, 4, 11)
        Q, R = qr_thin(A)
        assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-12)
        assert np.allclose(Q @ R, A, atol=1e-12)
        assert np.all(np.diag(R) >= 0)
        assert np.allclose(R, np.triu(R))

    def test_wide_matrix_rejected(self):
        with pytest.raises(ValidationError):
            qr_thin(np.ones((2, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericalError):
            qr_thin([[np.nan], [1.0]])


class TestEigh:
    def test_diagonal(self):
        eig = eigh_symmetric(np.diag([2.0, 1.0]))
        assert np.allclose(eig.values, [2.0, 1.0])
        assert np.allclose(eig.vectors, np.eye(2))

    def test_swap_matrix_closed_form(self):
        eig = eigh_symmetric([[0.0, 1.0], [1.0, 0.0]])
        r = 1.0 / np.sqrt(2.0)
        assert np.allclose(eig.values, [1.0, -1.0])
        assert np.allclose(eig.vectors, [[r, r], [r, -r]])

    def test_identity_keeps_identity_vectors(self):
        eig = eigh_symmetric(np.eye(5))
        assert np.allclose(eig.values, 1.0)
        assert np.allclose(eig.vectors, np.eye(5))

    def test_random_symmetric_residual(self):
        X = _random(6, 6, 3)
        A = X + X.T
        eig = eigh_symmetric(A)
        V = eig.vectors
        assert np.all(np.diff(eig.values) <= 0)
        assert np.allclose(V.T @ V, np.eye(6), atol=1e-12)
        assert np.allclose(A @ V, V * eig.values, atol=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValidationError):
            eigh_symmetric([[0.0, 1.0], [0.0, 0.0]])


class TestSvd:
    def test_values_of_diagonal(self):
        assert np.allclose(svd_values(np.diag([3.0, 1.0])), [3.0, 1.0])

    def test_values_hand_oracle(self):
        assert np.allclose(svd_values([[3.0, 0.1], [0.0, 1.0]]), [3.001874, 0.999375], atol=1e-6)

    def test_zero_matrix(self):
        assert np.array_equal(svd_values(np.zeros((3, 2))), np.zeros(2))

    def test_diagonal_factors_follow_conventions(self):
        U, S, V = svd_thin(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(S, [3.0, 2.0, 1.0])
        assert np.allclose(U, np.eye(3))
        assert np.allclose(V, np.eye(3))

    def test_random_reconstruction(self):
        A = _random(5, 3, 8)
        U, S, V = svd_thin(A)
        assert np.max(np.abs(U * S @ V.T - A)) <= 1e-10 * np.max(np.abs(A))

    def test_wide_matrix_reconstruction(self):
        A = _random(3, 6, 2)
        U, S, V = svd_thin(A)
        assert U.shape == (3, 3) and V.shape == (6, 3)
        assert np.allclose(U * S @ V.T, A, atol=1e-10)

    def test_rank_one(self):
        u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
        S = svd_values(np.outer(u, v))
        assert S[0] == pytest.approx(15.0)
        assert S[1] == 0.0


class TestRidgeInverse:
    def test_identity(self):
        assert np.allclose(ridge_inverse(np.eye(3), 0.5), np.eye(3) * 2.0 / 3.0)

    def test_singular_gram(self):
        assert np.allclose(ridge_inverse(np.diag([3.0, 0.0]), 1.0), np.diag([0.25, 1.0]))

    def test_random_psd_residual(self):
        X = _random(6, 4, 5)
        G = X.T @ X
        inv = ridge_inverse(G, 1e-3)
        assert np.array_equal(inv, inv.T)
        assert np.allclose(inv @ (G + 1e-3 * np.eye(4)), np.eye(4), atol=1e-9)

    def test_pi_must_be_positive(self):
        with pytest.raises(ValidationError):
            ridge_inverse(np.eye(2), 0.0)
