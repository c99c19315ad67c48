import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfapc.controller import (
    ControllerConfig,
    ControllerState,
    mfapc_control,
    mfapc_control_iterative,
    mfapc_control_pid,
    solve_normal_equations,
)
from mfapc.edlm import PseudoJacobianMatrix
from mfapc.errors import DimensionError, HorizonError, SingularSystemError
from mfapc.predictor import build_prediction_operators, predict_horizon
from mfapc.simkit import Example11Plant, FIRPlant, ReferenceSignal, Ramp, run_closed_loop

from conftest import PHI1, PHI2


def random_state(rng, Mu, L):
    return ControllerState(u_prev=rng.normal(size=Mu), dU_history=rng.normal(size=L * Mu))


def cost(ops, refs, y, dprev, dU, lam):
    r = refs - predict_horizon(ops, y, dprev, dU)
    return float(r @ r + dU @ (lam * dU))


class TestConfig:
    def test_nu_above_n(self):
        with pytest.raises(HorizonError):
            ControllerConfig(N=2, Nu=3, L=1)

    def test_lambda_length(self):
        cfg = ControllerConfig(2, 2, 1, lam=[0.1, 0.2, 0.3])
        with pytest.raises(DimensionError):
            cfg.lambda_vector(2)

    def test_uniform_detection(self):
        assert ControllerConfig(2, 2, 1, lam=[0.1] * 4).uniform_lambda == 0.1
        assert ControllerConfig(2, 2, 1, lam=[0.1, 0.2, 0.1, 0.1]).uniform_lambda is None


class TestControlLaw:
    def test_deadbeat_formula(self, eq48_pjm):
        rng = np.random.default_rng(0)
        state = random_state(rng, 2, 2)
        y, ref = rng.normal(size=2), rng.normal(size=2)
        u, new, dU = mfapc_control(state, eq48_pjm, y, ref, ControllerConfig(1, 1, 2, 0.0))
        expected = np.linalg.solve(PHI1, ref - y - PHI2 @ state.dU_history[:2])
        np.testing.assert_allclose(dU, expected, atol=1e-12)
        np.testing.assert_allclose(u, state.u_prev + expected, atol=1e-12)
        # the linear plant then lands exactly on the reference
        y_next = y + PHI1 @ dU + PHI2 @ state.dU_history[:2]
        np.testing.assert_allclose(y_next, ref, atol=1e-12)

    def test_history_shift(self, eq48_pjm):
        rng = np.random.default_rng(1)
        state = random_state(rng, 2, 2)
        _, new, dU = mfapc_control(state, eq48_pjm, np.zeros(2), np.ones(4), ControllerConfig(2, 2, 2))
        np.testing.assert_array_equal(new.dU_history, np.concatenate([dU[:2], state.dU_history[:2]]))

    def test_huge_penalty_freezes_input(self, eq48_pjm):
        rng = np.random.default_rng(2)
        state = random_state(rng, 2, 2)
        u, _, _ = mfapc_control(state, eq48_pjm, rng.normal(size=2), rng.normal(size=4), ControllerConfig(2, 2, 2, 1e12))
        np.testing.assert_allclose(u, state.u_prev, atol=1e-9)

    def test_on_target_no_move(self, eq48_pjm):
        state = ControllerState.zeros(2, 2, u0=[0.3, 0.1])
        y = np.array([0.7, -0.2])
        u, _, dU = mfapc_control(state, eq48_pjm, y, np.tile(y, 3), ControllerConfig(3, 2, 2, 0.05))
        assert np.array_equal(dU, np.zeros(4))
        assert np.array_equal(u, state.u_prev)

    def test_singular_raises_and_fallback_min_norm(self):
        pjm = PseudoJacobianMatrix([[[1.0, 2.0]]])  # My=1, Mu=2 -> rank-1 normal matrix at lambda=0
        state = ControllerState.zeros(2, 1)
        with pytest.raises(SingularSystemError):
            mfapc_control(state, pjm, [0.0], [1.0], ControllerConfig(1, 1, 1, 0.0))
        _, _, dU = mfapc_control(state, pjm, [0.0], [1.0], ControllerConfig(1, 1, 1, 0.0, pseudo_inverse_fallback=True))
        np.testing.assert_allclose(dU, np.linalg.pinv(np.array([[1.0, 2.0]])) @ [1.0], atol=1e-12)

    def test_negative_lambda_indefinite(self, eq48_pjm):
        rng = np.random.default_rng(3)
        cfg = ControllerConfig(2, 2, 2, lam=[-0.3, 0.01, -0.2, 0.05])
        state = random_state(rng, 2, 2)
        y, refs = rng.normal(size=2), rng.normal(size=4)
        _, _, dU = mfapc_control(state, eq48_pjm, y, refs, cfg)
        ops = build_prediction_operators(eq48_pjm, 2, 2)
        H = ops.psi_nu.T @ ops.psi_nu + np.diag(cfg.lambda_vector(2))
        rhs = ops.psi_nu.T @ (refs - ops.E @ y - ops.psi_bar @ state.dU_history)
        np.testing.assert_allclose(H @ dU, rhs, atol=1e-10)

    def test_solver_singular_message_carries_iteration(self):
        with pytest.raises(SingularSystemError) as info:
            solve_normal_equations(np.zeros((2, 2)), np.ones(2), iteration=3)
        assert info.value.iteration == 3

    def test_dimension_checks(self, eq48_pjm):
        state = ControllerState.zeros(2, 2)
        with pytest.raises(DimensionError):
            mfapc_control(state, eq48_pjm, np.zeros(2), np.zeros(3), ControllerConfig(2, 2, 2))
        with pytest.raises(DimensionError):
            mfapc_control(state, eq48_pjm, np.zeros(2), np.zeros(2), ControllerConfig(1, 1, 3))

    @settings(max_examples=50)
    @given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 2), st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_optimality_and_stationarity(self, L, N, My, Mu, seed):
        rng = np.random.default_rng(seed)
        Nu = int(rng.integers(1, N + 1))
        pjm = PseudoJacobianMatrix(rng.normal(size=(L, My, Mu)))
        lam = rng.uniform(0.01, 1.0, size=Nu * Mu)
        cfg = ControllerConfig(N, Nu, L, lam=lam)
        state = random_state(rng, Mu, L)
        y, refs = rng.normal(size=My), rng.normal(size=N * My)
        u, _, dU = mfapc_control(state, pjm, y, refs, cfg)
        ops = build_prediction_operators(pjm, N, Nu)
        # receding-horizon selector
        np.testing.assert_allclose(u, state.u_prev + dU[:Mu], atol=1e-12)
        # lambda dU = Psi^T (Y* - Y_N)
        resid = refs - predict_horizon(ops, y, state.dU_history, dU)
        np.testing.assert_allclose(lam * dU, ops.psi_nu.T @ resid, atol=1e-9)
        J0 = cost(ops, refs, y, state.dU_history, dU, lam)
        for i in range(dU.size):
            for s in (1e-4, -1e-4):
                d = dU.copy()
                d[i] += s
                assert cost(ops, refs, y, state.dU_history, d, lam) >= J0 - 1e-12

    @given(st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_deadbeat_property(self, L, seed):
        rng = np.random.default_rng(seed)
        # 3I + small perturbations keeps the plant minimum phase, so the inverse it implies is stable
        blocks = 0.2 * rng.normal(size=(L, 2, 2))
        blocks[0] += 3 * np.eye(2)
        plant = FIRPlant(blocks)
        ref = ReferenceSignal([Ramp(0.1, 0), Ramp(-0.05, 3)])
        tr = run_closed_loop(plant, ControllerConfig(1, 1, L, 0.0), ref, 30)
        assert np.max(np.abs(tr.e[1:])) < 1e-9


class TestDoubleIntegrator:
    def test_rhs_includes_previous_solution(self, eq48_pjm):
        rng = np.random.default_rng(4)
        prev = rng.normal(size=4)
        state = ControllerState(np.zeros(2), rng.normal(size=4), dU_nu_prev=prev)
        cfg = ControllerConfig(2, 2, 2, 0.2, double_integrator_mode=True)
        y, refs = rng.normal(size=2), rng.normal(size=4)
        _, _, dU = mfapc_control(state, eq48_pjm, y, refs, cfg)
        ops = build_prediction_operators(eq48_pjm, 2, 2)
        H = ops.psi_nu.T @ ops.psi_nu + 0.2 * np.eye(4)
        rhs = ops.psi_nu.T @ (refs - ops.E @ y - ops.psi_bar @ state.dU_history) + 0.2 * prev
        np.testing.assert_allclose(dU, np.linalg.solve(H, rhs), atol=1e-12)

    def test_ramp_tracking_bounded(self):
        plant = FIRPlant([PHI1, PHI2])
        cfg = ControllerConfig(2, 2, 2, 0.1, double_integrator_mode=True)
        tr = run_closed_loop(plant, cfg, ReferenceSignal([Ramp(0.01, 0), Ramp(-0.02, 0)]), 400)
        assert not tr.diverged
        assert np.max(np.abs(tr.e[200:])) < 1e-3


class TestPID:
    def _setup(self, seed):
        rng = np.random.default_rng(seed)
        pjm = PseudoJacobianMatrix(rng.normal(size=(2, 2, 2)) + np.eye(2))
        return rng, pjm, random_state(rng, 2, 2), ControllerConfig(3, 2, 2, 0.1)

    @given(st.integers(0, 2**32 - 1))
    def test_identity_integral_reduces_to_plain(self, seed):
        rng, pjm, state, cfg = self._setup(seed)
        y, refs = rng.normal(size=2), rng.normal(size=6)
        a = mfapc_control(state, pjm, y, refs, cfg)
        b = mfapc_control_pid(state, pjm, y, refs, cfg, K_P=np.zeros((2, 2)), K_I=np.eye(2),
                              refs_prev=rng.normal(size=6))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[2], b[2])

    def test_zero_gains_leave_only_past_term(self):
        rng, pjm, state, cfg = self._setup(5)
        ops = build_prediction_operators(pjm, 3, 2)
        _, _, dU = mfapc_control_pid(state, pjm, rng.normal(size=2), rng.normal(size=6), cfg, 0.0, 0.0)
        H = ops.psi_nu.T @ ops.psi_nu + 0.1 * np.eye(4)
        np.testing.assert_allclose(dU, np.linalg.solve(H, -ops.psi_nu.T @ ops.psi_bar @ state.dU_history), atol=1e-12)

    def test_steady_state_proportional_term_vanishes(self):
        rng, pjm, state, cfg = self._setup(6)
        y = np.array([0.2, 0.4])
        refs = np.tile([1.0, -1.0], 3)
        state = ControllerState(state.u_prev, state.dU_history, y_prev=y)
        KP = np.array([[2.0, 0.3], [0.1, 1.5]])
        a = mfapc_control_pid(state, pjm, y, refs, cfg, K_P=KP, K_I=np.eye(2), refs_prev=refs)
        b = mfapc_control(state, pjm, y, refs, cfg)
        np.testing.assert_allclose(a[2], b[2], atol=1e-12)

    def test_bad_gain_shape(self):
        rng, pjm, state, cfg = self._setup(7)
        with pytest.raises(DimensionError):
            mfapc_control_pid(state, pjm, np.zeros(2), np.zeros(6), cfg, K_P=np.eye(3), K_I=np.eye(2))


class TestIterative:
    def test_single_pass_constant_gradient(self, eq48_pjm):
        rng = np.random.default_rng(8)
        state = random_state(rng, 2, 2)
        cfg = ControllerConfig(3, 2, 2, 0.05)
        y, refs = rng.normal(size=2), rng.normal(size=6)
        u_a, _, _ = mfapc_control(state, eq48_pjm, y, refs, cfg)
        u_b, _ = mfapc_control_iterative(lambda h: eq48_pjm, state, y, refs, cfg, 1)
        np.testing.assert_allclose(u_a, u_b, atol=1e-12)

    @pytest.mark.parametrize("with_model", [False, True])
    def test_linear_plant_iteration_invariant(self, eq48_pjm, with_model):
        rng = np.random.default_rng(9)
        state = random_state(rng, 2, 2)
        cfg = ControllerConfig(2, 2, 2, 0.05)
        y, refs = rng.normal(size=2), rng.normal(size=4)
        model = (lambda h: PHI1 @ h[0] + PHI2 @ h[1]) if with_model else None
        u1, _ = mfapc_control_iterative(lambda h: eq48_pjm, state, y, refs, cfg, 1, output_model=model)
        u5, _ = mfapc_control_iterative(lambda h: eq48_pjm, state, y, refs, cfg, 5, output_model=model)
        np.testing.assert_allclose(u1, u5, atol=1e-10)
        u_plain, _, _ = mfapc_control(state, eq48_pjm, y, refs, cfg)
        np.testing.assert_allclose(u1, u_plain, atol=1e-10)

    def test_iteration_improves_nonlinear_prediction(self):
        plant = Example11Plant()
        u_prev = np.array([0.4, 1.5])
        u_prev2 = np.array([0.3, 1.4])
        state = ControllerState(u_prev=u_prev, dU_history=np.concatenate([u_prev - u_prev2, np.zeros(2)]))
        hist = np.vstack([u_prev, u_prev2])
        y_k = plant.step(hist)
        target = y_k + 1.0
        cfg = ControllerConfig(1, 1, 2, 1e-4)
        grad = lambda h: plant.true_pjm(h, None, 2)
        model = lambda h: plant.step(np.atleast_2d(h))

        def miss(u):
            return abs(float(plant.step(np.vstack([u, u_prev]))[0] - target[0]))

        u1, _ = mfapc_control_iterative(grad, state, y_k, target, cfg, 1, output_model=model)
        u5, _ = mfapc_control_iterative(grad, state, y_k, target, cfg, 5, output_model=model)
        assert miss(u5) < miss(u1)
        assert miss(u5) < 1e-3

    def test_singular_iteration_index(self):
        pjm = PseudoJacobianMatrix([[[1.0, 2.0]]])
        with pytest.raises(SingularSystemError) as info:
            mfapc_control_iterative(lambda h: pjm, ControllerState.zeros(2, 1), [0.0], [1.0],
                                    ControllerConfig(1, 1, 1, 0.0), 3)
        assert info.value.iteration == 0

    def test_rejects_zero_iterations(self, eq48_pjm):
        with pytest.raises(ValueError):
            mfapc_control_iterative(lambda h: eq48_pjm, ControllerState.zeros(2, 2), np.zeros(2), np.zeros(2),
                                    ControllerConfig(1, 1, 2), 0)
