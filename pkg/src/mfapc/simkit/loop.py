"""Closed-loop execution, training-data generation and the truncated-model demonstration."""
from __future__ import annotations

from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from ..controller import ControllerConfig, ControllerState, mfapc_control, mfapc_control_iterative
from ..edlm import DEFAULT_FD_STEP, PseudoJacobianMatrix, pjm_finite_difference
from ..errors import DimensionError, DivergenceError, EvaluationError, SingularSystemError
from ..estimators import LambdaTuner, MLPEstimator, RBFEstimator
from .plants import Plant, Remark2Plant
from .references import ReferenceSignal, Step
from .trace import SimTrace

DIVERGENCE_LIMIT = 1e6

ESTIMATOR_KINDS = ("true", "finite-difference", "mlp-offline", "mlp-online", "rbf-online")


class TruePJM:
    def __init__(self, plant: Plant, L: int):
        self.plant, self.L = plant, L

    def __call__(self, u_hist, y_hist, y_k):
        return self.plant.true_pjm(u_hist, y_hist, self.L)


class FiniteDifferencePJM:
    def __init__(self, plant: Plant, L: int, h: float = DEFAULT_FD_STEP):
        self.plant, self.L, self.h = plant, L, h

    def __call__(self, u_hist, y_hist, y_k):
        u = np.asarray(u_hist, dtype=float)[: self.L]
        return pjm_finite_difference(self.plant.input_map(y_hist), u, self.h)


class NetworkPJM:
    """PJM read off a network over the regressor ``[u(k-1), ..., u(k-L)]``.

    With ``online=True`` the network first takes one training step on the
    newest pair (regressor, ``y(k)``).
    """

    def __init__(self, net, L: int, Mu: int, online: bool):
        self.net, self.L, self.Mu, self.online = net, L, Mu, online
        self.last_output = None

    def __call__(self, u_hist, y_hist, y_k):
        x = np.asarray(u_hist, dtype=float)[: self.L].ravel()
        if self.online:
            self.net.train_step(x, y_k)
        self.last_output = self.net.forward(x)
        return self.net.to_pjm(x, self.Mu)


def make_estimator(kind: str, plant: Plant, L: int, net=None, seed=None, fd_step=DEFAULT_FD_STEP):
    if kind == "true":
        return TruePJM(plant, L)
    if kind == "finite-difference":
        return FiniteDifferencePJM(plant, L, fd_step)
    if kind in ("mlp-offline", "mlp-online"):
        if net is None:
            net = MLPEstimator.random(L * plant.Mu, [6], plant.My, rng=seed)
        return NetworkPJM(net, L, plant.Mu, online=kind == "mlp-online")
    if kind == "rbf-online":
        if net is None:
            net = RBFEstimator.example_12(rng=seed, n_inputs=L * plant.Mu, n_outputs=plant.My)
        return NetworkPJM(net, L, plant.Mu, online=True)
    raise ValueError(f"unknown estimator {kind!r}; choose from {ESTIMATOR_KINDS}")


def run_closed_loop(
    plant: Plant,
    cfg: ControllerConfig,
    reference: ReferenceSignal,
    steps: int,
    estimator="true",
    tuner: Optional[LambdaTuner] = None,
    y0=None,
    u0=None,
    seed=None,
    net=None,
    iterations: int = 1,
) -> SimTrace:
    """Simulate the MFAPC loop for ``steps`` samples starting at ``k = 1``.

    Per step: the estimator yields the PJM at ``[u(k-1), ..., u(k-L)]``; the
    tuner (if any) updates lambda from ``y(k)``; the controller computes
    ``u(k)`` against ``y*(k+1..k+N)``; the plant produces ``y(k+1)``.

    ``estimator`` is one of :data:`ESTIMATOR_KINDS` or a callable
    ``(u_hist, y_hist, y_k) -> PseudoJacobianMatrix``.  With ``iterations > 1``
    the iterative law is used with the plant's own gradient and input map.
    A non-finite signal, ``|y| > 1e6`` or a singular control law ends the run
    early with ``diverged`` set.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if reference.My != plant.My:
        raise DimensionError(f"reference has {reference.My} outputs, plant has {plant.My}")
    My, Mu, L = plant.My, plant.Mu, cfg.L
    est = make_estimator(estimator, plant, L, net=net, seed=seed) if isinstance(estimator, str) else estimator

    n_uh = max(plant.n_u + 1, L + 1)
    u_hist = np.zeros((n_uh, Mu))
    if u0 is not None:
        u_hist[:] = np.asarray(u0, dtype=float)
    y_hist = np.zeros((plant.n_y + 1, My))
    if y0 is not None:
        y_hist[:] = np.asarray(y0, dtype=float)
    state = ControllerState.zeros(Mu, L, u0=u_hist[0])

    n_lam = cfg.Nu * Mu
    rec_k = np.zeros(steps, dtype=int)
    rec_y = np.zeros((steps, My))
    rec_r = np.zeros((steps, My))
    rec_u = np.zeros((steps, Mu))
    rec_phi = np.zeros((steps, L * My * Mu))
    rec_lam = np.zeros((steps, n_lam))
    notes = []
    diverged, diverged_at = False, None
    n_done = 0

    for n in range(steps):
        k = n + 1
        y_k = y_hist[0].copy()
        try:
            pjm = est(u_hist, y_hist, y_k)
            step_cfg = cfg
            if tuner is not None:
                step_cfg = replace(cfg, lam=tuple(tuner.step(y_k)))
            refs = reference.horizon(k, cfg.N)
            if iterations > 1:
                u_k, state = mfapc_control_iterative(
                    lambda h: plant.true_pjm(h, y_hist, L), state, y_k, refs, step_cfg, iterations,
                    output_model=plant.input_map(y_hist),
                )
            else:
                u_k, state, _ = mfapc_control(state, pjm, y_k, refs, step_cfg)
        except (SingularSystemError, DivergenceError, EvaluationError) as exc:
            diverged, diverged_at = True, k
            notes.append(f"k={k}: {exc}")
            break
        if not np.all(np.isfinite(u_k)):
            diverged, diverged_at = True, k
            notes.append(f"k={k}: non-finite control input")
            break

        rec_k[n] = k
        rec_y[n] = y_k
        rec_r[n] = reference(k)
        rec_u[n] = u_k
        rec_phi[n] = pjm.blocks.ravel()
        rec_lam[n] = step_cfg.lambda_vector(Mu)
        n_done = n + 1

        u_hist = np.vstack([u_k, u_hist[:-1]])
        y_next = plant.step(u_hist[: plant.n_u + 1], y_hist)
        if not np.all(np.isfinite(y_next)) or np.max(np.abs(y_next)) > DIVERGENCE_LIMIT:
            diverged, diverged_at = True, k + 1
            notes.append(f"k={k + 1}: |y| exceeded {DIVERGENCE_LIMIT:g}")
            break
        y_hist = np.vstack([y_next, y_hist[:-1]])

    return SimTrace(
        k=rec_k[:n_done],
        y=rec_y[:n_done],
        yref=rec_r[:n_done],
        u=rec_u[:n_done],
        phi=rec_phi[:n_done],
        lam=rec_lam[:n_done],
        L=L,
        diverged=diverged,
        diverged_at=diverged_at,
        notes=notes,
    )


def generate_training_data(plant: Plant, inputs: Callable[[int], np.ndarray], steps: int, L: int | None = None):
    """Open-loop data: regressor ``[u(k), ..., u(k-L+1)]`` with target ``y(k+1)`` for ``k = 1..steps``.

    Inputs before ``k = 1`` and the initial outputs are zero.
    """
    L = plant.n_u + 1 if L is None else L
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n_uh = max(plant.n_u + 1, L)
    u_hist = np.zeros((n_uh, plant.Mu))
    y_hist = np.zeros((plant.n_y + 1, plant.My))
    X = np.zeros((steps, L * plant.Mu))
    Y = np.zeros((steps, plant.My))
    for n in range(steps):
        u_hist = np.vstack([np.atleast_1d(np.asarray(inputs(n + 1), dtype=float)), u_hist[:-1]])
        y_next = plant.step(u_hist[: plant.n_u + 1], y_hist)
        X[n] = u_hist[:L].ravel()
        Y[n] = y_next
        y_hist = np.vstack([y_next, y_hist[:-1]])
    return X, Y


def example11_inputs(k: int) -> np.ndarray:
    s = np.sin(np.pi * k / 100)
    return np.array([0.9 * s, 0.6 * s])


def remark2_demo(L: int = 3, steps: int = 200, N: int = 2, Nu: int = 2, lam: float = 0.01):
    """Partial-form MFAPC with the truncated impulse-response PJM on ``y(k+1) = 1.1 y(k) + u(k)``.

    Returns ``(trace, coefficients, peak)`` where ``coefficients`` are the
    ``phi_i = 1.1^(i-1)`` used and ``peak`` is the largest ``|y|`` reached
    (including the output that tripped the divergence guard).
    """
    plant = Remark2Plant()
    cfg = ControllerConfig(N, Nu, L, lam)
    trace = run_closed_loop(plant, cfg, ReferenceSignal([Step(1.0, 0)]), steps, estimator="true")
    coefs = plant.impulse_coefficients(L)
    peak = trace.max_abs_y()
    if trace.steps:
        last = plant.step(trace.u[-1:], trace.y[-1:])
        peak = max(peak, float(np.abs(last).max()))
    return trace, coefs, peak
