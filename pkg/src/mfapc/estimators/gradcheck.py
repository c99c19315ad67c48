"""Chain-rule Jacobians of random networks against central finite differences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import MLPEstimator
from .rbf import RBFEstimator

FAMILIES = ("mlp", "rbf")


def finite_difference_jacobian(net, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    J = np.empty((net.n_outputs, x.size))
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        J[:, i] = (net.forward(x + step) - net.forward(x - step)) / (2.0 * h)
    return J


def relative_error(J: np.ndarray, J_ref: np.ndarray) -> float:
    """``max|J - J_ref| / max(max|J|, max|J_ref|)``; absolute below a 1e-6 scale."""
    scale = max(np.max(np.abs(J)), np.max(np.abs(J_ref)), 1e-6)
    return float(np.max(np.abs(J - J_ref)) / scale)


def random_network(family: str, rng: np.random.Generator):
    n_in = int(rng.integers(1, 7))
    n_out = int(rng.integers(1, 4))
    if family == "mlp":
        hidden = [int(h) for h in rng.integers(2, 9, size=int(rng.integers(1, 4)))]
        return MLPEstimator.random(n_in, hidden, n_out, rng=rng)
    if family == "rbf":
        return RBFEstimator.random(n_in, int(rng.integers(1, 9)), n_out, rng=rng)
    raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")


@dataclass(frozen=True)
class GradcheckReport:
    family: str
    trials: int
    worst: float
    errors: np.ndarray

    def passed(self, tol: float = 1e-5) -> bool:
        return self.worst < tol


def gradcheck(family: str, trials: int, seed=None) -> GradcheckReport:
    """Compare every row of the analytic PJM with finite differences on ``trials`` random nets."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    errors = np.empty(trials)
    for n in range(trials):
        net = random_network(family, rng)
        x = rng.uniform(-1.0, 1.0, net.n_inputs)
        J_fd = finite_difference_jacobian(net, x)
        net.forward(x)
        J = np.vstack([net.pjm_row(x, t) for t in range(net.n_outputs)])
        errors[n] = relative_error(J, J_fd)
    return GradcheckReport(family, trials, float(errors.max()), errors)
