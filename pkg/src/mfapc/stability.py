"""Closed-loop pole analysis for a frozen PJM and uniform scalar lambda.

The characteristic matrix is

    T(z) = lambda (1 - z^-1) I + phi(z^-1) g^T Psi_Nu^T P(z),
    P(z) = [I, zI, ..., z^(N-1) I]^T,

stored multiplied through by ``z^L`` so every entry is an ordinary polynomial.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .edlm import PseudoJacobianMatrix
from .errors import DegenerateSystemError, MarginalSystemError, RankConditionWarning
from .predictor import build_prediction_operators

UNIT_CIRCLE_TOL = 1e-9
# coefficients below this (relative to the largest) are treated as exact zeros
_COEF_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CharacteristicMatrix:
    """``z^L T(z)`` as coefficients of shape ``(degree+1, My, My)``, ascending powers of z."""

    coefficients: np.ndarray
    N: int
    Nu: int
    L: int
    lam: float

    @property
    def My(self) -> int:
        return self.coefficients.shape[1]

    def evaluate(self, z) -> np.ndarray:
        """``T(z)`` itself (the ``z^L`` factor removed)."""
        out = np.zeros((self.My, self.My), dtype=complex if np.iscomplexobj(z) else float)
        for c in self.coefficients[::-1]:
            out = out * z + c
        return out / z ** self.L

    def determinant_coefficients(self) -> np.ndarray:
        """Ascending coefficients of ``det(z^L T(z))``."""
        My = self.My
        if My <= 4:
            return _leibniz_det(self.coefficients)
        return _interpolated_det(self.coefficients)


def _leibniz_det(coefs: np.ndarray) -> np.ndarray:
    n = coefs.shape[1]
    total = np.zeros(1)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = np.ones(1)
        for row, col in enumerate(perm):
            term = P.polymul(term, coefs[:, row, col])
        total = P.polyadd(total, sign * term)
    return np.atleast_1d(total)


def _perm_sign(perm) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def _interpolated_det(coefs: np.ndarray) -> np.ndarray:
    deg = (coefs.shape[0] - 1) * coefs.shape[1]
    m = deg + 1
    nodes = np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.empty(m, dtype=complex)
    for idx, z in enumerate(nodes):
        M = np.zeros(coefs.shape[1:], dtype=complex)
        for c in coefs[::-1]:
            M = M * z + c
        vals[idx] = np.linalg.det(M)
    # p(w^n) = sum_j c_j w^(jn) with w = exp(2 pi i / m), so c = DFT(p) / m
    return np.real(np.fft.fft(vals) / m)


def characteristic_matrix(pjm: PseudoJacobianMatrix, N: int, Nu: int, lam: float) -> CharacteristicMatrix:
    """Build ``z^L T(z)`` for the loop closed by the MFAPC law around ``pjm``."""
    lam = float(lam)
    L, My, Mu = pjm.blocks.shape
    phi1 = pjm.polynomial()(1.0)
    if Mu < My or np.linalg.matrix_rank(phi1) < My:
        warnings.warn(
            f"rank condition rank(phi(1)) = My fails (My={My}, Mu={Mu}, rank={np.linalg.matrix_rank(phi1)})",
            RankConditionWarning,
            stacklevel=2,
        )
    ops = build_prediction_operators(pjm, N, Nu)
    # g^T Psi_Nu^T: first Mu rows of Psi_Nu^T, split into the N output blocks
    gPsi = ops.psi_nu.T[:Mu]
    C = [gPsi[:, i * My:(i + 1) * My] for i in range(N)]  # coefficient of z^i in g^T Psi^T P
    deg = L + N - 1
    coefs = np.zeros((deg + 1, My, My))
    # z^L * lambda (1 - z^-1) I = lambda z^L - lambda z^(L-1)
    coefs[L] += lam * np.eye(My)
    coefs[L - 1] -= lam * np.eye(My)
    # z^L * Phi_i z^-(i-1) * C_j z^j = Phi_i C_j z^(L - i + 1 + j)
    for i in range(1, L + 1):
        for j in range(N):
            coefs[L - i + 1 + j] += pjm.blocks[i - 1] @ C[j]
    return CharacteristicMatrix(coefs, N, Nu, L, lam)


@dataclass(frozen=True)
class RootReport:
    roots: np.ndarray
    max_modulus: float
    stable: bool
    verdict: str
    determinant: np.ndarray
    zero_roots_removed: int = 0
    lam: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "verdict": self.verdict,
            "stable": self.stable,
            "max_modulus": self.max_modulus,
            "roots": [[float(r.real), float(r.imag)] for r in self.roots],
            "moduli": [float(abs(r)) for r in self.roots],
            "zero_roots_removed": self.zero_roots_removed,
            "determinant": [float(c) for c in self.determinant],
        }

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _trim(coefs: np.ndarray) -> tuple[np.ndarray, int]:
    """Drop negligible leading coefficients and factor out powers of z."""
    scale = np.max(np.abs(coefs)) if coefs.size else 0.0
    if scale == 0.0:
        raise DegenerateSystemError("det T(z) is identically zero")
    tol = _COEF_TOL * scale
    nz = np.flatnonzero(np.abs(coefs) > tol)
    lo, hi = nz[0], nz[-1]
    return coefs[lo:hi + 1], int(lo)


def stability_margin(T: CharacteristicMatrix) -> RootReport:
    """Roots of ``det T``; the loop is stable when none lie outside the unit circle."""
    det = T.determinant_coefficients()
    trimmed, removed = _trim(det)
    roots = P.polyroots(trimmed) if trimmed.size > 1 else np.zeros(0, dtype=complex)
    roots = np.asarray(roots, dtype=complex)
    max_mod = float(np.max(np.abs(roots))) if roots.size else 0.0
    verdict = _verdict(max_mod)
    return RootReport(
        roots=roots,
        max_modulus=max_mod,
        stable=verdict != "unstable",
        verdict=verdict,
        determinant=det,
        zero_roots_removed=removed,
        lam=T.lam,
    )


def closed_loop_poles(pjm: PseudoJacobianMatrix, N: int, Nu: int, lam) -> RootReport:
    """Eigenvalues of the loop formed by the MFAPC law and a plant that obeys ``pjm`` exactly.

    The state is ``[y(k); dU(k-1)]`` and the plant is the incremental model
    ``y(k+1) = y(k) + phi^T dU(k)``.  Unlike :func:`stability_margin` this
    accounts for every predicted output being replaced by a measurement at
    the next step, so it is exact for any ``N``; ``lam`` may be a scalar or
    the ``Nu*Mu`` diagonal entries.
    """
    L, My, Mu = pjm.blocks.shape
    ops = build_prediction_operators(pjm, N, Nu)
    lam_vec = np.broadcast_to(np.asarray(lam, dtype=float), (Nu * Mu,))
    H = ops.psi_nu.T @ ops.psi_nu + np.diag(lam_vec)
    K = np.linalg.lstsq(H, ops.psi_nu.T, rcond=None)[0][:Mu]
    gain = -np.hstack([K @ ops.E, K @ ops.psi_bar])  # du(k) = gain @ x
    n = My + L * Mu
    shift = np.zeros((n, n))
    shift[:My, :My] = np.eye(My)
    shift[My + Mu:, My:n - Mu] = np.eye((L - 1) * Mu)
    feed = np.zeros((n, Mu))
    feed[My:My + Mu] = np.eye(Mu)
    # dU(k) = shift part + B du(k), then y(k+1) = y(k) + phi^T dU(k)
    A = shift + feed @ gain
    A[:My] += pjm.matrix @ A[My:]
    roots = np.linalg.eigvals(A)
    max_mod = float(np.max(np.abs(roots)))
    verdict = _verdict(max_mod)
    uniform = float(lam_vec[0]) if np.all(lam_vec == lam_vec[0]) else float("nan")
    return RootReport(
        roots=roots,
        max_modulus=max_mod,
        stable=verdict != "unstable",
        verdict=verdict,
        determinant=np.real(np.poly(A))[::-1],
        lam=uniform,
    )


def _verdict(max_mod: float) -> str:
    if max_mod > 1.0 + UNIT_CIRCLE_TOL:
        return "unstable"
    if max_mod > 1.0 - UNIT_CIRCLE_TOL:
        return "marginal"
    return "stable"


@dataclass(frozen=True)
class StaticErrorReport:
    points: np.ndarray
    norms: np.ndarray
    at_one: float


def static_error_check(T: CharacteristicMatrix, lam: float | None = None, orders=range(1, 7)) -> StaticErrorReport:
    """Norm of ``S(z) = T(z)^-1 lambda (1 - z^-1)`` at ``z = 1`` and ``z = 1 + 10^-m``.

    ``S(1)`` is the steady-state error under a unit step; it vanishes because
    the ``(1 - z^-1)`` factor does.
    """
    lam = T.lam if lam is None else float(lam)
    T1 = T.evaluate(1.0)
    if np.linalg.matrix_rank(T1) < T.My or np.linalg.cond(T1) > 1e12:
        raise MarginalSystemError("T(1) is singular: the loop has an integrator pole at z = 1")
    zs = np.array([1.0] + [1.0 + 10.0 ** (-m) for m in orders])
    norms = np.empty(zs.size)
    for idx, z in enumerate(zs):
        S = np.linalg.solve(T.evaluate(z), lam * (1.0 - 1.0 / z) * np.eye(T.My))
        norms[idx] = np.linalg.norm(S, 2)
    return StaticErrorReport(points=zs, norms=norms, at_one=float(norms[0]))
