"""Equivalent dynamic linear model (EDLM).

The incremental model is

    dy(k+1) = [Phi_1 ... Phi_L] dU(k),   dU(k) = [du(k); du(k-1); ...; du(k-L+1)]

Increment stacks are always ordered newest block first.  Input histories passed
to plant evaluators follow the same convention: ``u_hist[0]`` is the most recent
input and ``u_hist[i]`` is the input ``i`` samples earlier.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, EvaluationError, InvalidInputError

DEFAULT_FD_STEP = 1e-5


def _as_blocks(blocks) -> np.ndarray:
    if isinstance(blocks, np.ndarray) and blocks.ndim == 3:
        arr = np.array(blocks, dtype=float)
    else:
        blocks = list(blocks)
        if not blocks:
            raise DimensionError("a pseudo-Jacobian needs at least one block (L >= 1)")
        mats = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
        shapes = {m.shape for m in mats}
        if len(shapes) != 1 or any(m.ndim != 2 for m in mats):
            raise DimensionError(f"ragged block dimensions: {[m.shape for m in mats]}")
        arr = np.stack(mats)
    if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
        raise DimensionError(f"invalid block array shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class PseudoJacobianMatrix:
    """The L-block matrix ``[Phi_1, ..., Phi_L]``, each block ``My x Mu``.

    ``blocks`` is stored as an array of shape ``(L, My, Mu)``; it is copied and
    made read-only on construction.
    """

    blocks: np.ndarray

    def __post_init__(self):
        arr = _as_blocks(self.blocks)
        arr.setflags(write=False)
        object.__setattr__(self, "blocks", arr)

    @property
    def L(self) -> int:
        return self.blocks.shape[0]

    @property
    def My(self) -> int:
        return self.blocks.shape[1]

    @property
    def Mu(self) -> int:
        return self.blocks.shape[2]

    @property
    def matrix(self) -> np.ndarray:
        """The flat ``My x (L*Mu)`` matrix ``phi_L^T``."""
        return np.concatenate(list(self.blocks), axis=1)

    def block(self, i: int) -> np.ndarray:
        """``Phi_i`` with 1-based ``i``; zero for ``i > L``."""
        if i < 1:
            raise IndexError("block index is 1-based")
        if i > self.L:
            return np.zeros((self.My, self.Mu))
        return self.blocks[i - 1]

    def polynomial(self) -> "MatrixPolynomial":
        return MatrixPolynomial(self.blocks)

    def truncated(self, L: int) -> "PseudoJacobianMatrix":
        """Resize to pseudo order ``L``, dropping or zero-padding trailing blocks."""
        if L < 1:
            raise DimensionError("L must be >= 1")
        if L <= self.L:
            return PseudoJacobianMatrix(self.blocks[:L])
        pad = np.zeros((L - self.L, self.My, self.Mu))
        return PseudoJacobianMatrix(np.concatenate([self.blocks, pad]))

    @classmethod
    def from_matrix(cls, matrix, Mu: int) -> "PseudoJacobianMatrix":
        """Split a flat ``My x (L*Mu)`` matrix into blocks."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        My, width = matrix.shape
        if Mu < 1 or width % Mu:
            raise DimensionError(f"width {width} is not a multiple of Mu={Mu}")
        return cls(matrix.reshape(My, width // Mu, Mu).transpose(1, 0, 2))

    def __eq__(self, other):
        if not isinstance(other, PseudoJacobianMatrix):
            return NotImplemented
        return self.blocks.shape == other.blocks.shape and np.array_equal(self.blocks, other.blocks)

    def __hash__(self):
        return hash((self.blocks.shape, self.blocks.tobytes()))

    def __repr__(self):
        return f"PseudoJacobianMatrix(L={self.L}, My={self.My}, Mu={self.Mu})"


@dataclass(frozen=True, eq=False)
class MatrixPolynomial:
    """``Phi_1 + Phi_2 q + ... + Phi_L q^(L-1)`` in the backward shift ``q = z^-1``."""

    coefficients: np.ndarray

    def __post_init__(self):
        arr = _as_blocks(self.coefficients)
        arr.setflags(write=False)
        object.__setattr__(self, "coefficients", arr)

    @property
    def degree(self) -> int:
        return self.coefficients.shape[0] - 1

    def __call__(self, q):
        """Evaluate at backward-shift value ``q`` (``q = 1/z``); complex allowed."""
        out = np.zeros(self.coefficients.shape[1:], dtype=np.result_type(q, float))
        for c in self.coefficients[::-1]:
            out = out * q + c
        return out


def make_shift_operators(L: int, Mu: int) -> tuple[np.ndarray, np.ndarray]:
    """Shift matrices with ``dU(k) = A dU(k-1) + B du(k)``.

    ``A`` carries identity blocks on its first block subdiagonal and ``B``
    stacks an identity on top of ``L - 1`` zero blocks.
    """
    if int(L) != L or int(Mu) != Mu or L < 1 or Mu < 1:
        raise DimensionError(f"L and Mu must be positive integers, got L={L}, Mu={Mu}")
    n = L * Mu
    A = np.eye(n, k=-Mu)
    B = np.eye(n, Mu)
    return A, B


def increment_stack(increments) -> np.ndarray:
    """Stack ``[du(k), du(k-1), ...]`` (newest first) into one column."""
    return np.concatenate([np.atleast_1d(np.asarray(d, dtype=float)) for d in increments])


def shift_increments(dU: np.ndarray, du: np.ndarray) -> np.ndarray:
    """Push ``du`` onto the front of ``dU``, dropping the oldest block."""
    du = np.atleast_1d(np.asarray(du, dtype=float))
    dU = np.asarray(dU, dtype=float)
    if dU.size % du.size:
        raise DimensionError(f"stack length {dU.size} is not a multiple of {du.size}")
    return np.concatenate([du, dU[: dU.size - du.size]])


def edlm_step(pjm: PseudoJacobianMatrix, dU) -> np.ndarray:
    """Output increment ``sum_i Phi_i du(k-i+1)`` predicted by the EDLM."""
    dU = np.asarray(dU, dtype=float).ravel()
    if dU.size != pjm.L * pjm.Mu:
        raise DimensionError(f"increment stack has length {dU.size}, expected L*Mu={pjm.L * pjm.Mu}")
    return np.einsum("lij,lj->i", pjm.blocks, dU.reshape(pjm.L, pjm.Mu))


def pjm_from_linear_plant(blocks) -> PseudoJacobianMatrix:
    """PJM of a linear plant ``dy(k+1) = sum_i G_i du(k-i+1)``: the coefficients themselves."""
    return PseudoJacobianMatrix(_as_blocks(blocks))


def pjm_finite_difference(
    plant: Callable[[np.ndarray], np.ndarray],
    u_hist,
    h: float = DEFAULT_FD_STEP,
) -> PseudoJacobianMatrix:
    """Central-difference Jacobian of ``plant`` w.r.t. each lagged input.

    Parameters
    ----------
    plant : callable
        Maps an input history of shape ``(L, Mu)`` (newest first) to the next
        output, a vector of length ``My``.
    u_hist : array_like, shape (L, Mu)
        Operating point.
    h : float
        Perturbation size.
    """
    if not h > 0:
        raise InvalidInputError(f"perturbation size must be positive, got {h}")
    u0 = np.atleast_2d(np.asarray(u_hist, dtype=float))
    L, Mu = u0.shape
    y0 = np.atleast_1d(np.asarray(plant(u0.copy()), dtype=float))
    if not np.all(np.isfinite(y0)):
        raise EvaluationError("plant output is not finite at the operating point", lag=None)
    blocks = np.zeros((L, y0.size, Mu))
    for lag in range(L):
        for j in range(Mu):
            up = u0.copy()
            um = u0.copy()
            up[lag, j] += h
            um[lag, j] -= h
            yp = np.atleast_1d(np.asarray(plant(up), dtype=float))
            ym = np.atleast_1d(np.asarray(plant(um), dtype=float))
            if not (np.all(np.isfinite(yp)) and np.all(np.isfinite(ym))):
                raise EvaluationError(f"plant output is not finite when perturbing lag {lag}", lag=lag)
            blocks[lag, :, j] = (yp - ym) / (2.0 * h)
    return PseudoJacobianMatrix(blocks)


def edlm_residual(plant, u_prev_hist, dU, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Linearization error ``dy_true - Phi dU`` of the EDLM around ``u_prev_hist``.

    ``u_prev_hist`` holds ``[u(k-1), ..., u(k-L)]``; the new history is that
    plus the increments, and the PJM is taken at the old operating point.
    """
    u_prev = np.atleast_2d(np.asarray(u_prev_hist, dtype=float))
    L, Mu = u_prev.shape
    dU = np.asarray(dU, dtype=float).reshape(L, Mu)
    pjm = pjm_finite_difference(plant, u_prev, h)
    dy = np.asarray(plant(u_prev + dU), dtype=float) - np.asarray(plant(u_prev), dtype=float)
    return dy - edlm_step(pjm, dU.ravel())
