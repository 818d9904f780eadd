import numpy as np
import pytest

from loopchern.errors import DimensionError
from loopchern.matrices import (
    Spectrum,
    block_diag,
    eig_multiset,
    kron,
    mat_exp,
    one_norm,
    rank_probe,
    solve,
)


def _series_exp(m, terms=80):
    # Independent oracle: scale below unit norm, sum the Taylor series, square back.
    m = np.asarray(m, dtype=complex)
    norm = float(np.abs(m).sum(axis=-2).max()) if m.size else 0.0
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    a = m / 2.0 ** s
    acc = np.eye(m.shape[-1], dtype=complex)
    term = np.eye(m.shape[-1], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        acc = acc + term
    for _ in range(s):
        acc = acc @ acc
    return acc


class TestMatExp:
    def test_zero_matrix(self):
        assert np.allclose(mat_exp(np.zeros((2, 2))), np.eye(2), atol=1e-15)

    def test_nilpotent(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert np.allclose(mat_exp(n), [[1, 1], [0, 1]], atol=1e-14)

    def test_jordan_block_two_pi_i(self):
        j = np.array([[2j * np.pi, 1.0], [0.0, 2j * np.pi]])
        expected = np.array([[1.0, 1.0], [0.0, 1.0]])
        got = mat_exp(j)
        assert np.allclose(got, expected, atol=1e-12)
        assert np.allclose(got, _series_exp(j), atol=1e-12)

    @pytest.mark.parametrize("scale", [0.5, 3.0, 12.0, 50.0])
    def test_against_series_oracle(self, scale):
        rng = np.random.default_rng(7)
        for _ in range(5):
            m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            m *= scale / one_norm(m)
            expected = _series_exp(m)
            rel = np.abs(mat_exp(m) - expected).max() / max(np.abs(expected).max(), 1.0)
            assert rel <= 1e-12

    def test_batched_matches_loop(self):
        rng = np.random.default_rng(3)
        ms = rng.standard_normal((6, 3, 3)) + 1j * rng.standard_normal((6, 3, 3))
        batched = mat_exp(ms)
        for i in range(6):
            assert np.allclose(batched[i], mat_exp(ms[i]), atol=1e-11)

    def test_block_diagonal_splits(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        whole = mat_exp(block_diag(a, b))
        assert np.allclose(whole[:2, :2], mat_exp(a), atol=1e-12)
        assert np.allclose(whole[2:, 2:], mat_exp(b), atol=1e-12)
        assert np.abs(whole[:2, 2:]).max() == 0.0
        assert np.abs(whole[2:, :2]).max() == 0.0

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            mat_exp(np.zeros((2, 3)))


class TestEig:
    def test_diagonal(self):
        spec = eig_multiset(np.diag([2.0, 3j]))
        assert spec.matches(Spectrum.of([2.0, 3j]), tol=1e-14)

    def test_triangular_repeated(self):
        spec = eig_multiset(np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert spec.matches(Spectrum.of([1.0, 1.0]), tol=1e-12)

    def test_rotation_quadratic_oracle(self):
        alpha = 1.0
        rot = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
        # roots of lam^2 - 2 lam cos(alpha) + 1 by the quadratic formula
        disc = np.sqrt(complex(np.cos(alpha) ** 2 - 1.0))
        expected = Spectrum.of([np.cos(alpha) + disc, np.cos(alpha) - disc])
        assert eig_multiset(rot).matches(expected, tol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6, 8])
    def test_against_numpy_oracle(self, n):
        rng = np.random.default_rng(n)
        for _ in range(8):
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            got = eig_multiset(m)
            expected = Spectrum.of(np.linalg.eigvals(m))
            assert got.matches(expected, tol=1e-8 * max(1.0, one_norm(m)))

    def test_trace_exp_identity(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            m *= 5.0 / one_norm(m)
            lhs = np.trace(mat_exp(m))
            rhs = sum(np.exp(lam) for lam in eig_multiset(m).values)
            assert abs(lhs - rhs) <= 1e-9

    def test_eig_sum_matches_trace(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        s = sum(eig_multiset(m).values)
        assert abs(s - np.trace(m)) <= 1e-10 * one_norm(m)

    def test_conjugation_invariance(self):
        rng = np.random.default_rng(17)
        for _ in range(6):
            m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            g += 5.0 * np.eye(5)
            conj = g @ m @ np.linalg.inv(g)
            assert eig_multiset(conj).matches(eig_multiset(m), tol=1e-8 * one_norm(m))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            eig_multiset(np.zeros((3, 2)))


class TestSolveAndHelpers:
    def test_solve_against_numpy(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((5, 4, 4)) + 1j * rng.standard_normal((5, 4, 4))
        b = rng.standard_normal((5, 4, 2)) + 1j * rng.standard_normal((5, 4, 2))
        assert np.allclose(solve(a, b), np.linalg.solve(a, b), atol=1e-11)

    def test_solve_needs_pivoting(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        b = np.array([[2.0], [3.0]], dtype=complex)
        assert np.allclose(solve(a, b), [[3.0], [2.0]])

    def test_rank_probe(self):
        assert rank_probe(np.eye(3) - np.eye(3)) == 0
        assert rank_probe(np.array([[1.0, 1.0], [0.0, 1.0]]) - np.eye(2)) == 1
        assert rank_probe(np.diag([1.0, 2.0, 0.0])) == 2

    def test_kron_ordering(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.eye(2)
        assert np.allclose(kron(a, b), np.kron(a, b))
        rng = np.random.default_rng(9)
        x = rng.standard_normal((3, 3))
        y = rng.standard_normal((2, 2))
        assert np.allclose(kron(x, y), np.kron(x, y))
