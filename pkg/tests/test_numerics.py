import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmdextrap.exceptions import BadLength, NonFinite, RankDeficient, ShapeError, ZeroMatrix
from dmdextrap.numerics import (
    eig_dense,
    fft,
    frobenius_norm,
    hessenberg,
    inverse_fft,
    left_pinv,
    norms,
    schur_qr,
    truncated_svd,
    truncation_rank,
    two_col_norm,
)
from oracles import (
    ROTATION_EIGS,
    SIGMA_RANK1_OUTER,
    direct_dft,
    eig2x2_charpoly,
    gram_singular_values_2col,
    match_sets,
)


class TestTruncatedSvd:
    def test_threshold_drops_tiny_value(self):
        svd = truncated_svd(np.diag([1.0, 1e-9]), 1e-8)
        assert svd.r == 1
        np.testing.assert_allclose(svd.sigma, [1.0])

    def test_identity_keeps_all(self):
        svd = truncated_svd(np.eye(3), 1e-8)
        assert svd.r == 3
        np.testing.assert_allclose(svd.sigma, [1.0, 1.0, 1.0])

    def test_rank_one_outer_product(self):
        x = np.outer([1.0, 2.0, 2.0], [3.0, 4.0])
        assert gram_singular_values_2col(x)[0] == pytest.approx(SIGMA_RANK1_OUTER)
        svd = truncated_svd(x, 1e-8)
        assert svd.r == 1
        assert svd.sigma[0] == pytest.approx(SIGMA_RANK1_OUTER, rel=1e-14)

    def test_strict_inequality_at_threshold(self):
        assert truncation_rank(np.array([1.0, 1e-8, 1e-9]), 1e-8) == 1

    def test_reconstruction_and_orthonormality(self, rng):
        x = rng.standard_normal((12, 5)) + 1j * rng.standard_normal((12, 5))
        svd = truncated_svd(x, 1e-12)
        np.testing.assert_allclose(svd.reconstruct(), x, atol=1e-12)
        np.testing.assert_allclose(svd.u.conj().T @ svd.u, np.eye(svd.r), atol=1e-12)
        assert np.all(np.diff(svd.sigma) <= 0)

    def test_real_input_gives_real_factors(self, rng):
        svd = truncated_svd(rng.standard_normal((6, 4)), 1e-8)
        assert not np.iscomplexobj(svd.u)

    def test_errors(self):
        with pytest.raises(ZeroMatrix):
            truncated_svd(np.zeros((3, 2)), 1e-8)
        with pytest.raises(NonFinite):
            truncated_svd(np.array([[1.0, np.nan]]), 1e-8)
        with pytest.raises(ValueError):
            truncated_svd(np.eye(2), 1.5)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 8), st.integers(2, 8), st.integers(0, 2**31 - 1))
    def test_rank_never_exceeds_min_dim(self, n, m, seed):
        x = np.random.default_rng(seed).standard_normal((n, m))
        svd = truncated_svd(x, 1e-8)
        assert 1 <= svd.r <= min(n, m)
        assert np.all(svd.sigma > 1e-8 * svd.sigma[0])


class TestEigDense:
    def test_scalar(self):
        np.testing.assert_allclose(eig_dense([[0.5]]).values, [0.5])

    def test_diagonal(self):
        vals = eig_dense(np.diag([0.9, 0.5])).values
        assert match_sets(vals, [0.9, 0.5]) < 1e-14

    def test_rotation_matches_charpoly(self):
        a = [[0.0, -0.8], [0.8, 0.0]]
        oracle = eig2x2_charpoly(a)
        assert match_sets(oracle, ROTATION_EIGS) < 1e-15
        vals = eig_dense(a).values
        assert match_sets(vals, ROTATION_EIGS) < 1e-14
        # exact conjugates for real input
        assert vals[0] == np.conj(vals[1])

    @pytest.mark.parametrize("n", [3, 7, 20, 45])
    def test_residual_random_real(self, n, rng):
        a = rng.standard_normal((n, n))
        eig = eig_dense(a)
        resid = a @ eig.vectors - eig.vectors * eig.values
        assert np.abs(resid).max() < 1e-10 * max(1.0, np.abs(a).max())
        assert match_sets(eig.values, np.linalg.eigvals(a)) < 1e-9

    def test_complex_input(self, rng):
        a = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        eig = eig_dense(a)
        np.testing.assert_allclose(a @ eig.vectors, eig.vectors * eig.values, atol=1e-10)

    def test_sorted_by_modulus(self, rng):
        vals = eig_dense(rng.standard_normal((10, 10))).values
        assert np.all(np.diff(np.abs(vals)) <= 1e-12)

    def test_unit_vectors(self, rng):
        vecs = eig_dense(rng.standard_normal((6, 6))).vectors
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=0), 1.0)

    def test_schur_form(self, rng):
        a = rng.standard_normal((8, 8))
        t, z = schur_qr(a)
        np.testing.assert_allclose(z @ t @ z.conj().T, a, atol=1e-12)
        assert np.abs(np.tril(t, -1)).max() < 1e-12

    def test_hessenberg_similarity(self, rng):
        a = rng.standard_normal((7, 7))
        h, q = hessenberg(a)
        np.testing.assert_allclose(q @ h @ q.conj().T, a, atol=1e-12)
        assert np.abs(np.tril(h, -2)).max() < 1e-13

    def test_rejects_nonsquare_and_oversize(self):
        with pytest.raises(ShapeError):
            eig_dense(np.ones((2, 3)))
        with pytest.raises(ShapeError):
            eig_dense(np.eye(5), max_size=4)


class TestLeftPinv:
    def test_unit_column(self):
        np.testing.assert_allclose(left_pinv([[1.0], [0.0]]), [[1.0, 0.0]])

    def test_orthonormal_columns(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        np.testing.assert_allclose(left_pinv(q), q.T, atol=1e-14)

    def test_scaled_columns(self):
        phi = np.array([[2.0, 0.0], [0.0, 0.0], [0.0, 3.0]])
        p = left_pinv(phi)
        np.testing.assert_allclose(p, [[0.5, 0, 0], [0, 0, 1 / 3]], atol=1e-15)
        np.testing.assert_allclose(p @ phi, np.eye(2), atol=1e-15)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            left_pinv([[1.0, 2.0], [2.0, 4.0]])


class TestFft:
    def test_impulse_and_constant(self):
        np.testing.assert_allclose(fft([1, 0, 0, 0]), [1, 1, 1, 1])
        np.testing.assert_allclose(fft([1, 1, 1, 1]), [4, 0, 0, 0])

    def test_single_exponential_matches_direct_dft(self):
        x = np.exp(2j * np.pi * np.arange(8) / 8)
        oracle = np.array(direct_dft(x))
        expected = np.zeros(8, complex)
        expected[1] = 8
        np.testing.assert_allclose(oracle, expected, atol=1e-12)
        np.testing.assert_allclose(fft(x), oracle, atol=1e-12)

    def test_round_trip(self, rng):
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        np.testing.assert_allclose(inverse_fft(fft(x)), x, atol=1e-14)

    @pytest.mark.parametrize("n", [0, 1, 3, 6, 100])
    def test_bad_length(self, n):
        with pytest.raises(BadLength):
            fft(np.ones(n))


class TestNorms:
    def test_three_four_five(self):
        assert norms([[3.0], [4.0]]) == (5.0, 5.0)

    def test_identity(self):
        assert frobenius_norm(np.eye(2)) == pytest.approx(math.sqrt(2))
        assert norms(np.eye(2)).two_col is None

    def test_sum_of_squares(self):
        assert frobenius_norm([[1, 2], [3, 4]]) == pytest.approx(math.sqrt(1 + 4 + 9 + 16))

    def test_two_col_needs_column(self):
        with pytest.raises(ShapeError):
            two_col_norm(np.eye(2))
