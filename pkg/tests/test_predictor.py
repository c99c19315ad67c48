import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfapc.edlm import PseudoJacobianMatrix
from mfapc.errors import DimensionError, HorizonError, InvalidInputError
from mfapc.predictor import build_prediction_operators, build_prediction_operators_tv, predict_horizon

from conftest import PHI1, PHI2, linear_rollout

Z = np.zeros((2, 2))


def random_pjm(rng, L, My, Mu):
    return PseudoJacobianMatrix(rng.normal(size=(L, My, Mu)))


class TestFrozenOperators:
    def test_two_step_expansion(self, eq48_pjm):
        ops = build_prediction_operators(eq48_pjm, 2, 2)
        np.testing.assert_array_equal(ops.psi_nu, np.block([[PHI1, Z], [PHI1 + PHI2, PHI1]]))
        np.testing.assert_array_equal(ops.psi_bar, np.block([[PHI2, Z], [PHI2, Z]]))
        np.testing.assert_array_equal(ops.E, np.vstack([np.eye(2), np.eye(2)]))

    def test_single_step_any_L(self):
        blocks = np.random.default_rng(0).normal(size=(4, 2, 3))
        ops = build_prediction_operators(PseudoJacobianMatrix(blocks), 1, 1)
        np.testing.assert_array_equal(ops.psi_nu, blocks[0])
        np.testing.assert_array_equal(ops.psi_bar, np.hstack([blocks[1], blocks[2], blocks[3], np.zeros((2, 3))]))

    def test_L1_has_no_past_dependence(self):
        ops = build_prediction_operators(PseudoJacobianMatrix([np.eye(2)]), 4, 2)
        assert not np.any(ops.psi_bar)

    @pytest.mark.parametrize("N,Nu", [(2, 3), (0, 0), (1, 0)])
    def test_bad_horizons(self, eq48_pjm, N, Nu):
        with pytest.raises(HorizonError):
            build_prediction_operators(eq48_pjm, N, Nu)

    @given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_invariants(self, L, N, My, Mu, seed):
        rng = np.random.default_rng(seed)
        Nu = int(rng.integers(1, N + 1))
        pjm = random_pjm(rng, L, My, Mu)
        ops = build_prediction_operators(pjm, N, Nu)
        assert not np.any(ops.psi_bar[:, (L - 1) * Mu:])
        for i in range(N):
            for j in range(Nu):
                blk = ops.psi_nu[i * My:(i + 1) * My, j * Mu:(j + 1) * Mu]
                if i < j:
                    assert not np.any(blk)
                else:
                    expected = sum(pjm.blocks[m] for m in range(min(i - j, L - 1) + 1))
                    np.testing.assert_allclose(blk, expected, atol=1e-12)
        A = np.eye(L * Mu, k=-Mu)
        for i in range(N):
            expected = sum(pjm.matrix @ np.linalg.matrix_power(A, m + 1) for m in range(i + 1))
            np.testing.assert_allclose(ops.psi_bar[i * My:(i + 1) * My], expected, atol=1e-12)


class TestTimeVarying:
    @given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_constant_sequence_collapses(self, L, N, seed):
        rng = np.random.default_rng(seed)
        Nu = int(rng.integers(1, N + 1))
        pjm = random_pjm(rng, L, 2, 2)
        a = build_prediction_operators(pjm, N, Nu)
        b = build_prediction_operators_tv([pjm] * N, N, Nu)
        np.testing.assert_allclose(a.psi_nu, b.psi_nu, atol=1e-12)
        np.testing.assert_allclose(a.psi_bar, b.psi_bar, atol=1e-12)

    def test_block_22_uses_next_pjm(self):
        rng = np.random.default_rng(3)
        p0, p1 = random_pjm(rng, 2, 2, 2), random_pjm(rng, 2, 2, 2)
        ops = build_prediction_operators_tv([p0, p1], 2, 2)
        np.testing.assert_array_equal(ops.psi_nu[2:, 2:], p1.blocks[0])
        np.testing.assert_allclose(ops.psi_nu[2:, :2], p0.blocks[0] + p1.blocks[1])

    def test_psi_bar_row2(self):
        rng = np.random.default_rng(4)
        p0, p1 = random_pjm(rng, 2, 2, 2), random_pjm(rng, 2, 2, 2)
        ops = build_prediction_operators_tv([p0, p1], 2, 2)
        np.testing.assert_array_equal(ops.psi_bar[2:], np.hstack([p0.blocks[1], Z]))

    def test_length_mismatch(self, eq48_pjm):
        with pytest.raises(InvalidInputError):
            build_prediction_operators_tv([eq48_pjm], 2, 2)

    def test_mixed_dimensions(self, eq48_pjm):
        with pytest.raises(InvalidInputError):
            build_prediction_operators_tv([eq48_pjm, eq48_pjm.truncated(1)], 2, 1)

    def test_linear_time_varying_rollout(self):
        # y(k+m+1) - y(k+m) = phi(k+m) dU(k+m): brute force against the operators
        rng = np.random.default_rng(5)
        L, N, Nu, My, Mu = 3, 4, 2, 2, 2
        pjms = [random_pjm(rng, L, My, Mu) for _ in range(N)]
        ops = build_prediction_operators_tv(pjms, N, Nu)
        past = rng.normal(size=(L, Mu))  # du(k-1), ..., du(k-L)
        fut = np.vstack([rng.normal(size=(Nu, Mu)), np.zeros((N - Nu, Mu))])
        seq = list(past[::-1]) + list(fut)
        y = rng.normal(size=My)
        y_k = y.copy()
        expected = []
        for m in range(N):
            idx = L + m
            y = y + sum(pjms[m].blocks[i] @ seq[idx - i] for i in range(L))
            expected.append(y.copy())
        got = predict_horizon(ops, y_k, past.ravel(), fut[:Nu].ravel())
        np.testing.assert_allclose(got, np.concatenate(expected), atol=1e-12)


class TestPredictHorizon:
    def test_zero_increments(self, eq48_pjm):
        ops = build_prediction_operators(eq48_pjm, 3, 2)
        y = np.array([0.3, -1.2])
        np.testing.assert_array_equal(predict_horizon(ops, y, np.zeros(4), np.zeros(4)), np.tile(y, 3))

    def test_one_step(self):
        rng = np.random.default_rng(6)
        pjm = random_pjm(rng, 3, 2, 2)
        ops = build_prediction_operators(pjm, 1, 1)
        y, dprev, du = rng.normal(size=2), rng.normal(size=6), rng.normal(size=2)
        expected = y + pjm.blocks[0] @ du + pjm.blocks[1] @ dprev[:2] + pjm.blocks[2] @ dprev[2:4]
        np.testing.assert_allclose(predict_horizon(ops, y, dprev, du), expected, atol=1e-12)

    def test_eq48_two_step_rollout(self, eq48_pjm):
        rng = np.random.default_rng(7)
        ops = build_prediction_operators(eq48_pjm, 2, 2)
        y, past, fut = rng.normal(size=2), rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
        expected = linear_rollout([PHI1, PHI2], list(past), list(fut), y)
        np.testing.assert_allclose(predict_horizon(ops, y, past.ravel(), fut.ravel()), expected, atol=1e-12)

    @given(st.integers(1, 4), st.integers(1, 6), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_exact_on_linear_plants(self, L, N, My, Mu, seed):
        rng = np.random.default_rng(seed)
        Nu = int(rng.integers(1, N + 1))
        blocks = rng.normal(size=(L, My, Mu))
        ops = build_prediction_operators(PseudoJacobianMatrix(blocks), N, Nu)
        y, past = rng.normal(size=My), rng.normal(size=(L, Mu))
        fut = np.vstack([rng.normal(size=(Nu, Mu)), np.zeros((N - Nu, Mu))])
        expected = linear_rollout(list(blocks), list(past), list(fut), y)
        got = predict_horizon(ops, y, past.ravel(), fut[:Nu].ravel())
        np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-10)

    @given(st.integers(1, 4), st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_truncation_consistency(self, L, N, seed):
        rng = np.random.default_rng(seed)
        pjm = random_pjm(rng, L, 2, 3)
        Nu = int(rng.integers(1, N + 1))
        y, past, fut = rng.normal(size=2), rng.normal(size=L * 3), rng.normal(size=Nu * 3)
        long = predict_horizon(build_prediction_operators(pjm, N, Nu), y, past, fut)
        short = predict_horizon(build_prediction_operators(pjm, 1, 1), y, past, fut[:3])
        np.testing.assert_allclose(long[:2], short, atol=1e-12)

    def test_dimension_errors(self, eq48_pjm):
        ops = build_prediction_operators(eq48_pjm, 2, 2)
        with pytest.raises(DimensionError):
            predict_horizon(ops, np.zeros(3), np.zeros(4), np.zeros(4))
        with pytest.raises(DimensionError):
            predict_horizon(ops, np.zeros(2), np.zeros(3), np.zeros(4))
        with pytest.raises(DimensionError):
            predict_horizon(ops, np.zeros(2), np.zeros(4), np.zeros(2))
