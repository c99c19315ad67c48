"""Gaussian RBF network with trainable centers, radii and output weights."""
from __future__ import annotations

import numpy as np

from ..edlm import PseudoJacobianMatrix
from ..errors import DimensionError, InvalidInputError, InvalidParameterError, StaleCacheError

RADIUS_FLOOR = 1e-6


class RBFEstimator:
    """``y_t = sum_j W[t, j] exp(-||x - c_j||^2 / (2 b_j^2))``.

    Hidden nodes are shared by all outputs.  All parameters are updated by
    per-sample gradient descent with the same momentum rule as the MLP.
    """

    def __init__(self, centers, radii, out_weights, eta=0.5, alpha=0.05, prev=None):
        self.centers = np.array(centers, dtype=float, ndmin=2)
        self.radii = np.array(radii, dtype=float).ravel()
        self.out_weights = np.array(out_weights, dtype=float, ndmin=2)
        m = self.centers.shape[0]
        if self.radii.size != m or self.out_weights.shape[1] != m:
            raise DimensionError("centers, radii and output weights disagree on the node count")
        if np.any(self.radii <= 0):
            raise InvalidParameterError("RBF radii must be strictly positive")
        if prev is None:
            prev = (self.centers, self.radii, self.out_weights)
        self.prev_centers, self.prev_radii, self.prev_out_weights = (np.array(p, dtype=float) for p in prev)
        self.eta = float(eta)
        self.alpha = float(alpha)
        self.radius_clamped = False
        self._cache = None

    @classmethod
    def example_12(cls, rng=None, n_inputs=4, n_nodes=6, n_outputs=1, eta=0.5, alpha=0.05):
        """Unit radii, all centers at ``0.01 * ones`` and uniform [-1, 1] output weights."""
        rng = np.random.default_rng(rng)
        centers = np.full((n_nodes, n_inputs), 0.01)
        return cls(centers, np.ones(n_nodes), rng.uniform(-1.0, 1.0, (n_outputs, n_nodes)), eta, alpha)

    @classmethod
    def random(cls, n_inputs, n_nodes, n_outputs, rng=None, eta=0.5, alpha=0.05):
        rng = np.random.default_rng(rng)
        return cls(
            rng.uniform(-1.0, 1.0, (n_nodes, n_inputs)),
            rng.uniform(0.5, 2.0, n_nodes),
            rng.uniform(-1.0, 1.0, (n_outputs, n_nodes)),
            eta,
            alpha,
        )

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.out_weights.shape[0]

    def copy(self) -> "RBFEstimator":
        new = RBFEstimator(
            self.centers, self.radii, self.out_weights, self.eta, self.alpha,
            prev=(self.prev_centers, self.prev_radii, self.prev_out_weights),
        )
        new.radius_clamped = self.radius_clamped
        return new

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_inputs:
            raise InvalidInputError(f"regressor has length {x.size}, network expects {self.n_inputs}")
        if np.any(self.radii <= 0):
            raise InvalidParameterError("RBF radii must be strictly positive")
        D = x - self.centers
        r2 = np.einsum("ij,ij->i", D, D)
        R = np.exp(-r2 / (2.0 * self.radii ** 2))
        y = self.out_weights @ R
        self._cache = (x.copy(), D, r2, R)
        return y

    def _cached(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if self._cache is None or not np.array_equal(self._cache[0], x):
            raise StaleCacheError("run forward() at this regressor before asking for its Jacobian")
        return self._cache

    def jacobian(self, x) -> np.ndarray:
        """``d y / d x``: ``-sum_j W[t, j] R_j (x - c_j) / b_j^2``."""
        _, D, _, R = self._cached(x)
        return -(self.out_weights * R) @ (D / self.radii[:, None] ** 2)

    def pjm_row(self, x, t: int) -> np.ndarray:
        return self.jacobian(x)[t]

    def to_pjm(self, x, Mu: int) -> PseudoJacobianMatrix:
        return PseudoJacobianMatrix.from_matrix(self.jacobian(x), Mu)

    def gradients(self, x, target):
        target = np.atleast_1d(np.asarray(target, dtype=float))
        if target.size != self.n_outputs:
            raise InvalidInputError(f"target has length {target.size}, network has {self.n_outputs} outputs")
        y = self.forward(x)
        _, D, r2, R = self._cache
        e = target - y
        # s_j = sum_t e_t W[t, j] R_j
        s = (e @ self.out_weights) * R
        g_w = -np.outer(e, R)
        g_c = -(s / self.radii ** 2)[:, None] * D
        g_b = -s * r2 / self.radii ** 3
        return (g_c, g_b, g_w), e

    def train_step(self, x, target) -> np.ndarray:
        target = np.atleast_1d(np.asarray(target, dtype=float))
        if not np.all(np.isfinite(target)):
            raise InvalidInputError("training target is not finite")
        (g_c, g_b, g_w), e = self.gradients(x, target)
        a, eta = self.alpha, self.eta
        c_new = self.centers - eta * g_c + a * (self.centers - self.prev_centers)
        b_new = self.radii - eta * g_b + a * (self.radii - self.prev_radii)
        w_new = self.out_weights - eta * g_w + a * (self.out_weights - self.prev_out_weights)
        if np.any(b_new <= RADIUS_FLOOR):
            b_new = np.maximum(b_new, RADIUS_FLOOR)
            self.radius_clamped = True
        self.prev_centers, self.prev_radii, self.prev_out_weights = self.centers, self.radii, self.out_weights
        self.centers, self.radii, self.out_weights = c_new, b_new, w_new
        self._cache = None
        return e
