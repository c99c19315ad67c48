"""Online adjustment of the move-suppression weights by a small network.

The network maps the current weight vector to the plant outputs.  Each step it
is trained on the measured outputs, then the weights themselves take a
gradient step on the same (output-weighted) squared error, with momentum.
"""
from __future__ import annotations

import numpy as np

from ..errors import DimensionError, DivergenceError
from .mlp import EXAMPLE_13_W1, EXAMPLE_13_W2, MLPEstimator


class LambdaTuner:
    def __init__(self, net: MLPEstimator, lam0, eta: float = 0.5, alpha: float = 0.0, cost_weights=None):
        lam0 = np.asarray(lam0, dtype=float).ravel()
        if lam0.size != net.n_inputs:
            raise DimensionError(f"lambda has {lam0.size} entries, tuner network expects {net.n_inputs}")
        self.net = net
        self.lam = lam0.copy()
        self.lam_prev = lam0.copy()   # lambda(k-1)
        self.lam_prev2 = lam0.copy()  # lambda(k-2)
        self.eta = float(eta)
        self.alpha = float(alpha)
        self.cost_weights = np.ones(net.n_outputs) if cost_weights is None else np.asarray(cost_weights, float).ravel()
        if self.cost_weights.size != net.n_outputs:
            raise DimensionError("one cost weight per plant output is required")
        self.steps = 0

    @classmethod
    def example_13(cls, Nu=2, Mu=2, My=2, eta=0.5, alpha=0.05, lam_eta=0.5, lam_alpha=0.0):
        """Example 1.3 tuner: published initial weights, output row replicated per plant output, lambda = 0."""
        if Nu * Mu != EXAMPLE_13_W1.shape[1]:
            raise DimensionError("the Example 1.3 weights take a 4-entry lambda vector")
        net = MLPEstimator([EXAMPLE_13_W1, np.tile(EXAMPLE_13_W2, (My, 1))], eta=eta, alpha=alpha)
        return cls(net, np.zeros(Nu * Mu), eta=lam_eta, alpha=lam_alpha)

    def error(self, y) -> float:
        """``E = 0.5 * sum_t l_t (y_t - y_net_t)^2`` at the current lambda."""
        e = np.atleast_1d(np.asarray(y, dtype=float)) - self.net.forward(self.lam)
        return 0.5 * float(np.sum(self.cost_weights * e ** 2))

    def step(self, y) -> np.ndarray:
        """Train on the measured outputs ``y(k)``, then move lambda. Returns the new lambda."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        self.net.train_step(self.lam, y, weights=self.cost_weights)
        e = y - self.net.forward(self.lam)
        J = self.net.jacobian(self.lam)
        grad = -(self.cost_weights * e) @ J
        new = self.lam - self.eta * grad + self.alpha * (self.lam_prev - self.lam_prev2)
        self.steps += 1
        if not np.all(np.isfinite(new)):
            raise DivergenceError(f"lambda became non-finite at tuner step {self.steps}", step=self.steps)
        self.lam_prev2, self.lam_prev, self.lam = self.lam_prev, self.lam, new
        return new.copy()
