"""Receding-horizon MFAPC control law and its PID-augmented and iterative variants."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .edlm import PseudoJacobianMatrix, shift_increments
from .errors import DimensionError, HorizonError, SingularSystemError
from .predictor import (
    PredictionOperators,
    build_prediction_operators,
    build_prediction_operators_tv,
)

# normal matrices with a condition number above this are treated as singular
_COND_LIMIT = 1e13


@dataclass(frozen=True)
class ControllerConfig:
    """Horizons, pseudo order and move-suppression weights.

    ``lam`` is either a scalar (the uniform choice ``lambda_i = lambda``) or
    the ``Nu*Mu`` diagonal entries.  Negative entries are allowed.
    """

    N: int
    Nu: int
    L: int
    lam: Union[float, Sequence[float]] = 0.01
    pseudo_inverse_fallback: bool = False
    double_integrator_mode: bool = False

    def __post_init__(self):
        for name in ("N", "Nu", "L"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise HorizonError(f"{name} must be a positive integer, got {v}")
        if self.Nu > self.N:
            raise HorizonError(f"control horizon Nu={self.Nu} exceeds prediction horizon N={self.N}")
        if not np.isscalar(self.lam):
            object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))

    @property
    def uniform_lambda(self) -> Optional[float]:
        """The scalar weight if every diagonal entry is equal, else ``None``."""
        if np.isscalar(self.lam):
            return float(self.lam)
        vals = set(self.lam)
        return vals.pop() if len(vals) == 1 else None

    def lambda_vector(self, Mu: int) -> np.ndarray:
        n = self.Nu * Mu
        if np.isscalar(self.lam):
            return np.full(n, float(self.lam))
        lam = np.asarray(self.lam, dtype=float)
        if lam.size != n:
            raise DimensionError(f"lambda has {lam.size} entries, expected Nu*Mu={n}")
        return lam


@dataclass(frozen=True)
class ControllerState:
    """Memory carried between control steps (all vectors, newest block first)."""

    u_prev: np.ndarray
    dU_history: np.ndarray
    dU_nu_prev: Optional[np.ndarray] = None
    ref_error_prev: Optional[np.ndarray] = None
    y_prev: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, Mu: int, L: int, u0=None) -> "ControllerState":
        u0 = np.zeros(Mu) if u0 is None else np.asarray(u0, dtype=float).copy()
        return cls(u_prev=u0, dU_history=np.zeros(L * Mu))

    def past_inputs(self, L: int) -> np.ndarray:
        """``[u(k-1), ..., u(k-L)]`` reconstructed from ``u_prev`` and the increments."""
        Mu = self.u_prev.size
        dU = self.dU_history.reshape(-1, Mu)
        out = np.empty((L, Mu))
        u = self.u_prev.copy()
        for p in range(L):
            out[p] = u
            if p < dU.shape[0]:
                u = u - dU[p]
        return out


def _check(state: ControllerState, pjm: PseudoJacobianMatrix, y_k, refs, cfg: ControllerConfig):
    if pjm.L != cfg.L:
        raise DimensionError(f"PJM pseudo order {pjm.L} differs from configured L={cfg.L}")
    if state.u_prev.size != pjm.Mu or state.dU_history.size != cfg.L * pjm.Mu:
        raise DimensionError("controller state does not match the PJM input dimension")
    y_k = np.atleast_1d(np.asarray(y_k, dtype=float))
    refs = np.asarray(refs, dtype=float).ravel()
    if y_k.size != pjm.My:
        raise DimensionError(f"y(k) has length {y_k.size}, expected My={pjm.My}")
    if refs.size != cfg.N * pjm.My:
        raise DimensionError(f"reference stack has length {refs.size}, expected N*My={cfg.N * pjm.My}")
    return y_k, refs


def solve_normal_equations(H, rhs, pseudo_inverse_fallback=False, iteration=None) -> np.ndarray:
    """Solve ``H x = rhs`` for the symmetric normal matrix ``H``.

    Cholesky first; LU when ``H`` is indefinite (negative weights); min-norm
    least squares when singular and the fallback is enabled.
    """
    singular = not np.all(np.isfinite(H)) or np.linalg.cond(H) > _COND_LIMIT
    if not singular:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            try:
                return scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), rhs)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
                pass
            try:
                return scipy.linalg.solve(H, rhs)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
                pass
    if pseudo_inverse_fallback and np.all(np.isfinite(H)):
        return np.linalg.lstsq(H, rhs, rcond=None)[0]
    where = "" if iteration is None else f" at iteration {iteration}"
    raise SingularSystemError(f"normal matrix [Psi^T Psi + lambda] is singular{where}", iteration=iteration)


def _solve(ops: PredictionOperators, bracket, cfg, state, lam, iteration=None):
    H = ops.psi_nu.T @ ops.psi_nu + np.diag(lam)
    rhs = ops.psi_nu.T @ bracket
    if cfg.double_integrator_mode and state.dU_nu_prev is not None:
        rhs = rhs + lam * state.dU_nu_prev
    return solve_normal_equations(H, rhs, cfg.pseudo_inverse_fallback, iteration)


def _advance(state: ControllerState, dU_nu, Mu, ref_error, y_k):
    du = dU_nu[:Mu]
    u_k = state.u_prev + du
    new = replace(
        state,
        u_prev=u_k,
        dU_history=shift_increments(state.dU_history, du),
        dU_nu_prev=dU_nu,
        ref_error_prev=ref_error,
        y_prev=y_k,
    )
    return u_k, new


def mfapc_control(state: ControllerState, pjm: PseudoJacobianMatrix, y_k, refs, cfg: ControllerConfig):
    """One step of the MFAPC law.

    Returns ``(u_k, new_state, dU_nu)`` where ``dU_nu`` is the full optimal
    move sequence; only its first ``Mu`` entries are applied.
    """
    y_k, refs = _check(state, pjm, y_k, refs, cfg)
    ops = build_prediction_operators(pjm, cfg.N, cfg.Nu)
    lam = cfg.lambda_vector(pjm.Mu)
    ref_error = refs - ops.E @ y_k
    bracket = ref_error - ops.psi_bar @ state.dU_history
    dU_nu = _solve(ops, bracket, cfg, state, lam)
    u_k, new = _advance(state, dU_nu, pjm.Mu, ref_error, y_k)
    return u_k, new, dU_nu


def _stack_gain(K, N, My) -> np.ndarray:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape == (My, My):
        return np.kron(np.eye(N), K)
    if K.shape == (N * My, N * My):
        return K
    if K.size == 1:
        return float(K.ravel()[0]) * np.eye(N * My)
    raise DimensionError(f"gain of shape {K.shape} fits neither My x My nor N*My x N*My")


def mfapc_control_pid(
    state: ControllerState,
    pjm: PseudoJacobianMatrix,
    y_k,
    refs,
    cfg: ControllerConfig,
    K_P,
    K_I,
    refs_prev=None,
):
    """MFAPC with the tracking-error bracket reshaped by integral/proportional gains.

    The bracket ``r = Y* - E y(k)`` becomes ``K_I r + K_P (r - r_prev)`` with
    ``r_prev = Y*(k) - E y(k-1)``.  ``r_prev`` comes from ``refs_prev`` and the
    stored previous output when given, else from the state; on the very first
    step the proportional term is zero.  ``K_I = I, K_P = 0`` reproduces
    :func:`mfapc_control` exactly.
    """
    y_k, refs = _check(state, pjm, y_k, refs, cfg)
    My = pjm.My
    KP = _stack_gain(K_P, cfg.N, My)
    KI = _stack_gain(K_I, cfg.N, My)
    ops = build_prediction_operators(pjm, cfg.N, cfg.Nu)
    lam = cfg.lambda_vector(pjm.Mu)
    r = refs - ops.E @ y_k
    if refs_prev is not None and state.y_prev is not None:
        r_prev = np.asarray(refs_prev, dtype=float).ravel() - ops.E @ state.y_prev
    elif state.ref_error_prev is not None:
        r_prev = state.ref_error_prev
    else:
        r_prev = r
    bracket = KI @ r + KP @ (r - r_prev) - ops.psi_bar @ state.dU_history
    dU_nu = _solve(ops, bracket, cfg, state, lam)
    u_k, new = _advance(state, dU_nu, pjm.Mu, r, y_k)
    return u_k, new, dU_nu


def _candidate_histories(past: np.ndarray, dU_nu: np.ndarray, N: int, Nu: int, L: int) -> list[np.ndarray]:
    """Input histories ``[u(k+m), ..., u(k+m-L+1)]`` for ``m = 0..N-1`` along a candidate move sequence."""
    Mu = past.shape[1]
    moves = dU_nu.reshape(Nu, Mu)
    future = []
    u = past[0].copy()
    for m in range(N):
        if m < Nu:
            u = u + moves[m]
        future.append(u.copy())
    # chronological sequence oldest..newest: u(k-L) .. u(k+N-1)
    seq = list(past[::-1]) + future
    hists = []
    for m in range(N):
        idx = L + m
        hists.append(np.array(seq[idx - L + 1: idx + 1][::-1]))
    return hists


def mfapc_control_iterative(
    gradient: Callable[[np.ndarray], PseudoJacobianMatrix],
    state: ControllerState,
    y_k,
    refs,
    cfg: ControllerConfig,
    iterations: int,
    output_model: Optional[Callable[[np.ndarray], np.ndarray]] = None,
):
    """Iterative MFAPC: re-linearize along the candidate move sequence before applying it.

    Parameters
    ----------
    gradient : callable
        Maps an input history ``(L, Mu)``, newest first, to the PJM of the
        plant at that history.
    iterations : int
        Number of relinearizations; the first uses the unmoved inputs.
    output_model : callable, optional
        Plant map from an input history to the next output.  When given, the
        predicted outputs at each iterate come from the model, so each pass is
        a Gauss-Newton step on the weighted cost.  Without it every pass solves
        the linear law with operators rebuilt at the current candidate.

    Returns
    -------
    (u_k, new_state)
    """
    if int(iterations) != iterations or iterations < 1:
        raise ValueError(f"iterations must be a positive integer, got {iterations}")
    L, N, Nu = cfg.L, cfg.N, cfg.Nu
    Mu = state.u_prev.size
    past = state.past_inputs(L)
    y_k = np.atleast_1d(np.asarray(y_k, dtype=float))
    refs = np.asarray(refs, dtype=float).ravel()
    lam = cfg.lambda_vector(Mu)
    dU_nu = np.zeros(Nu * Mu)
    y_model_now = None
    if output_model is not None:
        y_model_now = np.atleast_1d(np.asarray(output_model(past), dtype=float))

    for i in range(iterations):
        hists = _candidate_histories(past, dU_nu, N, Nu, L)
        pjms = [gradient(h) for h in hists]
        if pjms[0].L != L or pjms[0].My != y_k.size:
            raise DimensionError("gradient evaluator returned a PJM of the wrong shape")
        ops = build_prediction_operators_tv(pjms, N, Nu)
        H = ops.psi_nu.T @ ops.psi_nu + np.diag(lam)
        if output_model is None:
            rhs = ops.psi_nu.T @ (refs - ops.E @ y_k - ops.psi_bar @ state.dU_history)
            dU_nu = solve_normal_equations(H, rhs, cfg.pseudo_inverse_fallback, iteration=i)
        else:
            y_pred = np.concatenate(
                [y_k + np.atleast_1d(np.asarray(output_model(h), dtype=float)) - y_model_now for h in hists]
            )
            rhs = ops.psi_nu.T @ (refs - y_pred) - lam * dU_nu
            dU_nu = dU_nu + solve_normal_equations(H, rhs, cfg.pseudo_inverse_fallback, iteration=i)

    ref_error = refs - np.tile(y_k, N)
    return _advance(state, dU_nu, Mu, ref_error, y_k)
