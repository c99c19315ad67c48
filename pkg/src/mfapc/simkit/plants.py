"""Discrete-time plant models ``y(k+1) = f(y(k), ..., u(k), ...)``.

Histories are arrays with the newest sample first: ``u_hist[0] = u(k)``,
``y_hist[0] = y(k)``.
"""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..edlm import PseudoJacobianMatrix, pjm_finite_difference
from ..errors import DimensionError

EQ48_BLOCKS = (
    np.array([[1.0, 0.4], [0.8, 1.2]]),
    np.array([[0.5, 0.6], [0.4, 0.7]]),
)


class Plant(ABC):
    My: int
    Mu: int
    n_u: int  # u(k-n_u) is the oldest input that matters
    n_y: int  # y(k-n_y) is the oldest output that matters
    name = "plant"

    @abstractmethod
    def step(self, u_hist: np.ndarray, y_hist: np.ndarray) -> np.ndarray:
        """Next output from input history ``(n_u+1, Mu)`` and output history ``(n_y+1, My)``."""

    def input_map(self, y_hist):
        """The plant as a function of its input history alone, outputs frozen."""
        y_hist = np.array(y_hist, dtype=float)
        n = self.n_u + 1

        def f(u_hist):
            u_hist = np.atleast_2d(u_hist)
            if u_hist.shape[0] < n:
                pad = np.zeros((n - u_hist.shape[0], self.Mu))
                u_hist = np.vstack([u_hist, pad])
            return self.step(u_hist[:n], y_hist)

        return f

    def true_pjm(self, u_hist, y_hist, L: int) -> PseudoJacobianMatrix:
        """Partial derivatives w.r.t. ``u_hist`` lags ``0..L-1`` (central differences unless overridden)."""
        u = _fit_hist(u_hist, L, self.Mu)
        return pjm_finite_difference(self.input_map(y_hist), u)


def _fit_hist(u_hist, L, Mu):
    u = np.atleast_2d(np.asarray(u_hist, dtype=float))
    if u.shape[0] >= L:
        return u[:L]
    return np.vstack([u, np.zeros((L - u.shape[0], Mu))])


class Example11Plant(Plant):
    """``y(k+1) = u1(k) + 0.4 u2(k)^3 + 0.5 u1(k-1) + 0.6 u2(k-1)``."""

    My, Mu, n_u, n_y = 1, 2, 1, 0
    name = "example11"

    def step(self, u_hist, y_hist=None):
        u = np.asarray(u_hist, dtype=float)
        return np.array([u[0, 0] + 0.4 * u[0, 1] ** 3 + 0.5 * u[1, 0] + 0.6 * u[1, 1]])

    def true_pjm(self, u_hist, y_hist, L):
        u = _fit_hist(u_hist, 2, 2)
        blocks = np.zeros((max(L, 2), 1, 2))
        blocks[0] = [[1.0, 1.2 * u[0, 1] ** 2]]
        blocks[1] = [[0.5, 0.6]]
        return PseudoJacobianMatrix(blocks[:L])


class FIRPlant(Plant):
    """Linear plant ``y(k+1) = sum_i G_i u(k-i+1)``; its PJM is ``[G_1 ... G_n]``."""

    n_y = 0

    def __init__(self, blocks, name="fir"):
        self.blocks = np.array([np.atleast_2d(b) for b in blocks], dtype=float)
        if self.blocks.ndim != 3:
            raise DimensionError("FIR coefficient blocks must share one shape")
        self.n_u = self.blocks.shape[0] - 1
        self.My, self.Mu = self.blocks.shape[1:]
        self.name = name

    def step(self, u_hist, y_hist=None):
        u = np.asarray(u_hist, dtype=float)[: self.n_u + 1]
        return np.einsum("lij,lj->i", self.blocks, u)

    def true_pjm(self, u_hist, y_hist, L):
        return PseudoJacobianMatrix(self.blocks).truncated(L)


class IncrementalLinearPlant(FIRPlant):
    """``y(k+1) = y(k) + sum_i G_i du(k-i+1)``."""

    def __init__(self, blocks, name="linear"):
        super().__init__(blocks, name)
        self.n_u = self.blocks.shape[0]

    def step(self, u_hist, y_hist):
        u = np.asarray(u_hist, dtype=float)
        du = u[:-1] - u[1:]
        return np.asarray(y_hist, dtype=float)[0] + np.einsum("lij,lj->i", self.blocks, du[: self.blocks.shape[0]])


class Example13Plant(FIRPlant):
    """The coupled two-input two-output linear plant of Example 1.3."""

    def __init__(self):
        super().__init__(EQ48_BLOCKS, name="example13")


class Remark2Plant(Plant):
    """Open-loop unstable first-order plant ``y(k+1) = a y(k) + b u(k)``."""

    My, Mu, n_u, n_y = 1, 1, 0, 0
    name = "remark2"

    def __init__(self, a=1.1, b=1.0):
        self.a = float(a)
        self.b = float(b)

    def step(self, u_hist, y_hist):
        return np.array([self.a * np.asarray(y_hist, float)[0, 0] + self.b * np.asarray(u_hist, float)[0, 0]])

    def impulse_coefficients(self, L: int) -> np.ndarray:
        """``phi_i = b a^(i-1)``: the partial-form PJM truncated to ``L`` terms."""
        return self.b * self.a ** np.arange(L)

    def true_pjm(self, u_hist, y_hist, L):
        return PseudoJacobianMatrix(self.impulse_coefficients(L).reshape(L, 1, 1))


PLANTS = {
    "example11": Example11Plant,
    "example13": Example13Plant,
    "remark2": Remark2Plant,
}


def make_plant(kind: str, **params) -> Plant:
    if kind == "linear":
        return IncrementalLinearPlant(params["blocks"])
    if kind == "fir":
        return FIRPlant(params["blocks"])
    try:
        cls = PLANTS[kind]
    except KeyError:
        raise ValueError(f"unknown plant {kind!r}; choose from {sorted([*PLANTS, 'linear', 'fir'])}") from None
    return cls(**params)
