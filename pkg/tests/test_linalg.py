import numpy as np
import pytest

from dyson_blocks import linalg
from dyson_blocks.linalg import (HermiticityError, SingularMatrixError,
                                 frobenius_norm, hermitian_eigenvalues,
                                 invert, kron, operator_norm)


def rng():
    return np.random.Generator(np.random.Philox(key=[1234, 0]))


def random_hermitian(n, gen):
    a = gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))
    return (a + a.conj().T) / 2


class TestHermitianEigenvalues:
    def test_identity(self):
        assert np.allclose(hermitian_eigenvalues(np.eye(3)), [1, 1, 1])

    def test_diagonal(self):
        assert np.allclose(hermitian_eigenvalues(np.diag([-2.0, 0.0, 5.0])),
                           [-2, 0, 5])

    def test_pauli_x(self):
        # characteristic polynomial lambda^2 - 1 = 0
        ev = hermitian_eigenvalues(np.array([[0, 1], [1, 0]], dtype=complex))
        assert np.allclose(ev, [-1, 1])

    def test_sorted_ascending(self):
        ev = hermitian_eigenvalues(random_hermitian(12, rng()))
        assert np.all(np.diff(ev) >= 0)

    def test_sum_matches_trace(self):
        gen = rng()
        for n in (3, 8, 20):
            m = random_hermitian(n, gen)
            ev = hermitian_eigenvalues(m)
            assert abs(ev.sum() - np.trace(m).real) <= 1e-9 * n * frobenius_norm(m)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            hermitian_eigenvalues(np.ones((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(HermiticityError):
            hermitian_eigenvalues(np.array([[0, 1], [0, 0]], dtype=complex))


class TestInvert:
    def test_scaled_identity(self):
        assert np.allclose(invert(2 * np.eye(2)), 0.5 * np.eye(2))

    def test_unipotent(self):
        m = np.array([[1, 1], [0, 1]], dtype=complex)
        assert np.allclose(invert(m), [[1, -1], [0, 1]])

    def test_scalar_resolvent(self):
        assert np.allclose(invert(3j * np.eye(2)), -(1j / 3) * np.eye(2))

    def test_residual_certificate(self):
        gen = rng()
        for n in (4, 16):
            m = random_hermitian(n, gen) + 2j * np.eye(n)
            x = invert(m)
            assert frobenius_norm(m @ x - np.eye(n)) <= 1e-9 * n

    def test_involution(self):
        gen = rng()
        m = random_hermitian(8, gen) + 3j * np.eye(8)
        assert np.linalg.cond(m) < 1e6
        back = invert(invert(m))
        assert frobenius_norm(back - m) <= 1e-8 * frobenius_norm(m)

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            invert(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            invert(np.ones((2, 3)))


class TestKron:
    def test_identities(self):
        assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_unit_block_placement(self):
        e12 = np.zeros((2, 2)); e12[0, 1] = 1
        k = kron(e12, np.eye(2))
        expected = np.zeros((4, 4), dtype=complex)
        expected[0:2, 2:4] = np.eye(2)
        assert np.array_equal(k, expected)

    def test_block_diagonal_expansion(self):
        a = np.diag([1.0, 2.0])
        b = np.array([[0, 1], [1, 0]], dtype=complex)
        k = kron(a, b)
        expected = np.zeros((4, 4), dtype=complex)
        expected[0:2, 0:2] = b
        expected[2:4, 2:4] = 2 * b
        assert np.array_equal(k, expected)

    def test_mixed_product_and_associativity(self):
        gen = rng()
        a, c = (gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))
                for _ in range(2))
        b, d = (gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
                for _ in range(2))
        assert np.allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d),
                           atol=1e-12)
        assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)),
                           atol=1e-12)


class TestNorms:
    def test_identity(self):
        for d in (1, 4, 9):
            assert np.isclose(frobenius_norm(np.eye(d)), np.sqrt(d))
            assert np.isclose(operator_norm(np.eye(d)), 1.0)

    def test_zero(self):
        z = np.zeros((3, 3))
        assert frobenius_norm(z) == 0.0
        assert operator_norm(z) == 0.0

    def test_rank_one(self):
        m = np.array([[0, 3], [0, 0]], dtype=complex)
        assert np.isclose(frobenius_norm(m), 3.0)
        assert np.isclose(operator_norm(m), 3.0)

    def test_operator_below_frobenius(self):
        gen = rng()
        for _ in range(5):
            m = gen.standard_normal((6, 6)) + 1j * gen.standard_normal((6, 6))
            assert operator_norm(m) <= frobenius_norm(m) + 1e-12
