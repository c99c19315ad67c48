"""N-step prediction operators built from the EDLM.

    Y_N(k+1) = E y(k) + Psi_Nu dU_Nu(k) + Psi_bar dU(k-1)

Block algebra used throughout: ``phi^T A^m B = Phi_{m+1}`` (zero once
``m >= L``) and ``phi^T A^m`` is phi shifted left by ``m`` blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .edlm import PseudoJacobianMatrix
from .errors import DimensionError, HorizonError, InvalidInputError


@dataclass(frozen=True)
class PredictionOperators:
    E: np.ndarray
    psi_bar: np.ndarray
    psi_nu: np.ndarray
    N: int
    Nu: int
    L: int
    My: int
    Mu: int


def _check_horizons(N, Nu):
    if int(N) != N or int(Nu) != Nu or N < 1 or Nu < 1 or Nu > N:
        raise HorizonError(f"horizons must satisfy 1 <= Nu <= N, got N={N}, Nu={Nu}")


def _shifted(pjm: PseudoJacobianMatrix, m: int) -> np.ndarray:
    """``phi^T A^m`` as an ``My x L*Mu`` matrix."""
    L, My, Mu = pjm.blocks.shape
    out = np.zeros((My, L * Mu))
    for c in range(L - m):
        out[:, c * Mu:(c + 1) * Mu] = pjm.blocks[c + m]
    return out


def build_prediction_operators_tv(pjms: Sequence[PseudoJacobianMatrix], N: int, Nu: int) -> PredictionOperators:
    """Operators for a PJM sequence ``phi(k), ..., phi(k+N-1)``.

    Row block ``i`` (1-based) of ``Psi_bar`` is ``sum_{m<i} phi(k+m)^T A^{m+1}``
    and block ``(i, j)`` of ``Psi_Nu`` is ``sum_{m=j-1}^{i-1} Phi_{m-j+2}(k+m)``.
    """
    _check_horizons(N, Nu)
    pjms = list(pjms)
    if len(pjms) != N:
        raise InvalidInputError(f"need exactly N={N} PJMs, got {len(pjms)}")
    shapes = {p.blocks.shape for p in pjms}
    if len(shapes) != 1:
        raise InvalidInputError(f"PJM sequence has mixed dimensions: {sorted(shapes)}")
    L, My, Mu = pjms[0].blocks.shape

    E = np.tile(np.eye(My), (N, 1))
    psi_bar = np.zeros((N * My, L * Mu))
    acc = np.zeros((My, L * Mu))
    for i in range(N):
        acc = acc + _shifted(pjms[i], i + 1)
        psi_bar[i * My:(i + 1) * My] = acc

    psi_nu = np.zeros((N * My, Nu * Mu))
    for i in range(N):
        for j in range(min(i + 1, Nu)):
            blk = np.zeros((My, Mu))
            for m in range(j, i + 1):
                lag = m - j
                if lag < L:
                    blk += pjms[m].blocks[lag]
            psi_nu[i * My:(i + 1) * My, j * Mu:(j + 1) * Mu] = blk
    return PredictionOperators(E, psi_bar, psi_nu, N, Nu, L, My, Mu)


def build_prediction_operators(pjm: PseudoJacobianMatrix, N: int, Nu: int) -> PredictionOperators:
    """Operators under the frozen-PJM approximation ``phi(k+i) = phi(k)``."""
    _check_horizons(N, Nu)
    L, My, Mu = pjm.blocks.shape
    # partial sums S_d = Phi_1 + ... + Phi_{min(d+1, L)}
    partial = np.cumsum(pjm.blocks, axis=0)

    E = np.tile(np.eye(My), (N, 1))
    psi_bar = np.zeros((N * My, L * Mu))
    acc = np.zeros((My, L * Mu))
    for i in range(N):
        if i + 1 < L:
            acc = acc + _shifted(pjm, i + 1)
        psi_bar[i * My:(i + 1) * My] = acc

    psi_nu = np.zeros((N * My, Nu * Mu))
    for i in range(N):
        for j in range(min(i + 1, Nu)):
            psi_nu[i * My:(i + 1) * My, j * Mu:(j + 1) * Mu] = partial[min(i - j, L - 1)]
    return PredictionOperators(E, psi_bar, psi_nu, N, Nu, L, My, Mu)


def predict_horizon(ops: PredictionOperators, y_k, dU_prev, dU_future) -> np.ndarray:
    """Stacked predictions ``[y(k+1); ...; y(k+N)]``."""
    y_k = np.atleast_1d(np.asarray(y_k, dtype=float))
    dU_prev = np.asarray(dU_prev, dtype=float).ravel()
    dU_future = np.asarray(dU_future, dtype=float).ravel()
    if y_k.size != ops.My:
        raise DimensionError(f"y(k) has length {y_k.size}, expected My={ops.My}")
    if dU_prev.size != ops.L * ops.Mu:
        raise DimensionError(f"dU(k-1) has length {dU_prev.size}, expected L*Mu={ops.L * ops.Mu}")
    if dU_future.size != ops.Nu * ops.Mu:
        raise DimensionError(f"dU_Nu(k) has length {dU_future.size}, expected Nu*Mu={ops.Nu * ops.Mu}")
    return ops.E @ y_k + ops.psi_nu @ dU_future + ops.psi_bar @ dU_prev
