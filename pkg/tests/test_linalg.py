import math

import numpy as np
import pytest

from poscon import linalg
from poscon.errors import (DimensionMismatch, NotSymmetric, Overflow,
                           SingularMatrix)


def quadratic_eigs(trace, det):
    """Characteristic-polynomial oracle for symmetric 2x2 spectra."""
    disc = math.sqrt(trace * trace - 4.0 * det)
    return sorted(((trace - disc) / 2.0, (trace + disc) / 2.0))


class TestSolveLinear:
    def test_identity(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        np.testing.assert_allclose(linalg.solve_linear(np.eye(3), b), b)

    def test_diagonal(self):
        A = np.array([[2.0, 0.0], [0.0, 4.0]])
        b = np.array([[2.0], [8.0]])
        np.testing.assert_allclose(linalg.solve_linear(A, b), [[1.0], [2.0]])

    def test_permutation_by_substitution(self):
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        b = np.array([[3.0], [5.0]])
        z = linalg.solve_linear(A, b)
        np.testing.assert_allclose(z, [[5.0], [3.0]])
        np.testing.assert_allclose(A @ z, b)

    def test_singular_raises(self):
        with pytest.raises(SingularMatrix):
            linalg.solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))

    def test_non_square_raises(self):
        with pytest.raises(DimensionMismatch):
            linalg.solve_linear(np.ones((2, 3)), np.ones(2))

    def test_random_well_conditioned_roundtrip(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n = int(rng.integers(1, 13))
            A = rng.normal(size=(n, n)) + 3.0 * np.eye(n)
            if np.linalg.cond(A) > 1e6:
                continue
            b = rng.normal(size=(n, int(rng.integers(1, 4))))
            z = linalg.solve_linear(A, b)
            err = np.abs(A @ z - b).max()
            assert err <= 1e-8 * (1.0 + np.abs(b).max())

    def test_rejects_nonfinite(self):
        with pytest.raises(Overflow):
            linalg.solve_linear(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.eye(2))


class TestSymEigen:
    def test_identity(self):
        w, _ = linalg.sym_eigen(np.eye(2))
        np.testing.assert_allclose(w, [1.0, 1.0])

    def test_two_node_laplacian_spectrum(self):
        w, _ = linalg.sym_eigen(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        np.testing.assert_allclose(w, [0.0, 2.0], atol=1e-12)

    def test_pinned_2x2_against_quadratic_oracle(self):
        S = np.array([[-3.9375, 1.0625], [1.0625, -0.9375]])
        w, _ = linalg.sym_eigen(S)
        expected = quadratic_eigs(np.trace(S), np.linalg.det(S))
        np.testing.assert_allclose(w, expected, atol=1e-10)
        np.testing.assert_allclose(w, [-4.2757, -0.5993], atol=5e-5)

    def test_not_symmetric_raises(self):
        with pytest.raises(NotSymmetric):
            linalg.sym_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_random_properties(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            n = int(rng.integers(1, 9))
            S = rng.normal(size=(n, n))
            S = S + S.T
            w, V = linalg.sym_eigen(S)
            assert np.all(np.diff(w) >= -1e-12)
            scale = 1.0 + np.abs(np.trace(S))
            assert abs(w.sum() - np.trace(S)) <= 1e-8 * scale
            np.testing.assert_allclose(V @ V.T, np.eye(n), atol=1e-8)
            np.testing.assert_allclose(S @ V, V @ np.diag(w),
                                       atol=1e-8 * (1.0 + np.abs(S).max()))


class TestExpm:
    def test_zero_matrix(self):
        np.testing.assert_allclose(linalg.expm(np.zeros((3, 3)), 12.0), np.eye(3))

    def test_upper_triangular_closed_form(self):
        # e^{At} for A = [[a, a], [0, 0]] is [[e^{at}, e^{at}-1], [0, 1]]
        A = np.array([[0.01, 0.01], [0.0, 0.0]])
        E = linalg.expm(A, 10.0)
        e = math.exp(0.1)
        np.testing.assert_allclose(E, [[e, e - 1.0], [0.0, 1.0]], rtol=1e-12)
        np.testing.assert_allclose(E, [[1.10517, 0.10517], [0.0, 1.0]],
                                   atol=5e-6)

    def test_diagonal(self):
        E = linalg.expm(np.diag([-1.0, -2.0]), 1.0)
        np.testing.assert_allclose(E, np.diag([math.exp(-1), math.exp(-2)]),
                                   rtol=1e-12)

    def test_semigroup_property(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(1, 6))
            A = rng.normal(size=(n, n))
            A *= 2.0 / max(np.linalg.norm(A, 2), 2.0)
            s, t = rng.uniform(0.0, 5.0, size=2)
            left = linalg.expm(A, s) @ linalg.expm(A, t)
            right = linalg.expm(A, s + t)
            np.testing.assert_allclose(left, right,
                                       rtol=1e-7, atol=1e-7 * np.abs(right).max())

    def test_overflow_raises(self):
        with pytest.raises(Overflow):
            linalg.expm(np.array([[1000.0]]), 1.0)


class TestSpectralNorm:
    def test_identity(self):
        assert linalg.spectral_norm(np.eye(5)) == pytest.approx(1.0)

    def test_pattern_matrix_against_gram_oracle(self):
        A = np.array([[0.01, 0.01], [0.0, 0.0]])
        # largest eigenvalue of A'A via the quadratic oracle
        G = A.T @ A
        lam_max = quadratic_eigs(np.trace(G), np.linalg.det(G))[1]
        assert linalg.spectral_norm(A) == pytest.approx(math.sqrt(lam_max))
        assert linalg.spectral_norm(A) == pytest.approx(0.014142, abs=1e-6)

    def test_zero(self):
        assert linalg.spectral_norm(np.zeros((3, 2))) == 0.0
