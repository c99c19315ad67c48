"""Bias-free sigmoid MLP used to learn the plant map and read off its input Jacobian.

Layer ``l`` computes ``net = W_l a_{l-1}``; hidden layers apply the logistic
sigmoid, the output layer is linear.  Training is per-sample gradient descent
on ``E = 0.5 * ||y - y_net||^2`` with the momentum rule

    W(k) = W(k-1) + dW(k) + alpha * (W(k-1) - W(k-2)).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from ..edlm import PseudoJacobianMatrix
from ..errors import DimensionError, InvalidInputError, NonConvergenceError, StaleCacheError
from . import _kernels

# Example 1.1 initial weights; first layer given as (hidden x inputs)
EXAMPLE_11_W1 = 0.1 * np.array(
    [
        [-8, -1, -6, -7, 9, 1],
        [4, 5, -9, 3, 4, -2],
        [1, -5, 4, 6, -2, 7],
        [7, -1, -3, 2, 8, -3],
    ],
    dtype=float,
).T
EXAMPLE_11_W2 = 0.1 * np.array([[-1, -3, 7, -5, 8, -2]], dtype=float)

# Example 1.3 lambda-tuner initial weights
EXAMPLE_13_W1 = 0.1 * np.array(
    [
        [-1] * 6,
        [2] * 6,
        [-3] * 6,
        [4] * 6,
    ],
    dtype=float,
).T
EXAMPLE_13_W2 = 0.1 * np.array([[1, -2, 3, -4, 5, -6]], dtype=float)


sigmoid = expit


@dataclass
class _Cache:
    x: np.ndarray
    nets: list
    acts: list
    y: np.ndarray


class MLPEstimator:
    """Feed-forward network with ``len(weights) - 1`` sigmoid hidden layers.

    Parameters
    ----------
    weights : sequence of 2-D arrays
        ``weights[l]`` has shape ``(size_{l+1}, size_l)``; the first takes the
        regressor, the last produces the ``My`` outputs.
    eta, alpha : float
        Learning rate and momentum constant.
    prev_weights : sequence of 2-D arrays, optional
        ``W(k-1)`` for the momentum term; defaults to ``weights`` (no momentum
        on the first update).
    """

    def __init__(self, weights: Sequence[np.ndarray], eta: float = 0.5, alpha: float = 0.05, prev_weights=None):
        self.weights = [np.array(w, dtype=float, ndmin=2) for w in weights]
        if len(self.weights) < 2:
            raise DimensionError("need at least one hidden layer")
        for a, b in zip(self.weights[:-1], self.weights[1:]):
            if b.shape[1] != a.shape[0]:
                raise DimensionError(f"layer shapes do not chain: {a.shape} -> {b.shape}")
        if prev_weights is None:
            self.prev_weights = [w.copy() for w in self.weights]
        else:
            self.prev_weights = [np.array(w, dtype=float, ndmin=2) for w in prev_weights]
            if [w.shape for w in self.prev_weights] != [w.shape for w in self.weights]:
                raise DimensionError("momentum buffer shapes differ from the weights")
        self.eta = float(eta)
        self.alpha = float(alpha)
        self._cache: _Cache | None = None

    @classmethod
    def random(cls, n_inputs: int, hidden: Sequence[int], n_outputs: int, rng=None, eta=0.5, alpha=0.05):
        """Weights drawn uniformly from [-1, 1]."""
        rng = np.random.default_rng(rng)
        sizes = [n_inputs, *hidden, n_outputs]
        weights = [rng.uniform(-1.0, 1.0, size=(sizes[i + 1], sizes[i])) for i in range(len(sizes) - 1)]
        return cls(weights, eta=eta, alpha=alpha)

    @classmethod
    def example_11(cls, eta=0.5, alpha=0.05):
        return cls([EXAMPLE_11_W1, EXAMPLE_11_W2], eta=eta, alpha=alpha)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_sizes(self) -> list[int]:
        return [w.shape[0] for w in self.weights[:-1]]

    def copy(self) -> "MLPEstimator":
        return MLPEstimator(self.weights, self.eta, self.alpha, self.prev_weights)

    def _regressor(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n_inputs:
            raise InvalidInputError(f"regressor has length {x.size}, network expects {self.n_inputs}")
        return x

    def forward(self, x) -> np.ndarray:
        """Network output at regressor ``x``; caches the layer activations."""
        x = self._regressor(x)
        nets, acts = [], [x]
        a = x
        for W in self.weights[:-1]:
            net = W @ a
            a = sigmoid(net)
            nets.append(net)
            acts.append(a)
        y = self.weights[-1] @ a
        self._cache = _Cache(x.copy(), nets, acts, y)
        return y.copy()

    def _cached(self, x) -> _Cache:
        x = np.asarray(x, dtype=float).ravel()
        c = self._cache
        if c is None or c.x.shape != x.shape or not np.array_equal(c.x, x):
            raise StaleCacheError("run forward() at this regressor before asking for its Jacobian")
        return c

    def jacobian(self, x) -> np.ndarray:
        """``d y_net / d x`` (``My x n_inputs``) by the chain rule through the cached pass."""
        c = self._cached(x)
        J = self.weights[-1]
        for W, a in zip(self.weights[-2::-1], c.acts[:0:-1]):
            J = (J * (a * (1.0 - a))) @ W
        return J.copy()

    def pjm_row(self, x, t: int) -> np.ndarray:
        """Row ``t`` of the estimated PJM, i.e. ``d y_t / d x``."""
        return self.jacobian(x)[t]

    def to_pjm(self, x, Mu: int) -> PseudoJacobianMatrix:
        """Reshape the Jacobian over ``[u(k-1), ..., u(k-L)]`` into PJM blocks."""
        return PseudoJacobianMatrix.from_matrix(self.jacobian(x), Mu)

    def to_full_form(self, x, Ly: int, Mu: int) -> tuple[np.ndarray, PseudoJacobianMatrix]:
        """Split the Jacobian over a :func:`full_form_regressor` into output-lag and input-lag parts.

        Returns ``(dy_dylags, pjm)``: the ``My x Ly*My`` partials with respect to
        ``y(k-1), ..., y(k-Ly)`` and the input-lag blocks as a PJM.
        """
        J = self.jacobian(x)
        cut = Ly * self.n_outputs
        return J[:, :cut], PseudoJacobianMatrix.from_matrix(J[:, cut:], Mu)

    def gradients(self, x, target, weights=None) -> tuple[list[np.ndarray], np.ndarray]:
        """``dE/dW`` for every layer, with ``E = 0.5 * sum(weights * e**2)``."""
        target = np.atleast_1d(np.asarray(target, dtype=float))
        if target.size != self.n_outputs:
            raise InvalidInputError(f"target has length {target.size}, network has {self.n_outputs} outputs")
        y = self.forward(x)
        c = self._cache
        e = target - y
        delta = -e if weights is None else -np.asarray(weights, dtype=float) * e
        grads = [None] * len(self.weights)
        grads[-1] = np.outer(delta, c.acts[-1])
        for l in range(len(self.weights) - 2, -1, -1):
            a = c.acts[l + 1]
            delta = (self.weights[l + 1].T @ delta) * a * (1.0 - a)
            grads[l] = np.outer(delta, c.acts[l])
        return grads, e

    def apply_update(self, grads) -> None:
        new = []
        for W, Wp, g in zip(self.weights, self.prev_weights, grads):
            new.append(W - self.eta * g + self.alpha * (W - Wp))
        self.prev_weights = self.weights
        self.weights = new
        self._cache = None

    def train_step(self, x, target, weights=None) -> np.ndarray:
        """One generalized-delta-rule update; returns the pre-update error ``y - y_net``."""
        target = np.atleast_1d(np.asarray(target, dtype=float))
        if not np.all(np.isfinite(target)):
            raise InvalidInputError("training target is not finite")
        grads, e = self.gradients(x, target, weights)
        self.apply_update(grads)
        return e


def full_form_regressor(y_lags, u_lags) -> np.ndarray:
    """``[y(k-1); ...; y(k-Ly); u(k-1); ...; u(k-Lu)]`` from newest-first lag arrays."""
    y = np.atleast_2d(np.asarray(y_lags, dtype=float))
    u = np.atleast_2d(np.asarray(u_lags, dtype=float))
    return np.concatenate([y.ravel(), u.ravel()])


def train_offline(
    net: MLPEstimator,
    regressors,
    targets,
    threshold: float,
    max_epochs: int = 100_000,
    use_kernel: bool = True,
) -> tuple[MLPEstimator, int, float]:
    """Repeat in-order passes of per-sample updates until the epoch error drops below ``threshold``.

    The epoch error is ``sum over samples of 0.5 * ||e||^2`` measured on the
    fly, before each sample's update.  Returns ``(net, epochs, final_error)``;
    ``net`` is updated in place.  Raises :class:`NonConvergenceError` at the
    epoch cap.
    """
    X = np.atleast_2d(np.asarray(regressors, dtype=float))
    if X.size == 0:
        raise InvalidInputError("empty training set")
    Y = np.asarray(targets, dtype=float).reshape(X.shape[0], -1)
    if not threshold > 0:
        raise InvalidInputError("threshold must be positive")
    if X.shape[1] != net.n_inputs or Y.shape[1] != net.n_outputs:
        raise DimensionError("training data does not match the network dimensions")

    if use_kernel and len(net.weights) == 2:
        W1, W2, P1, P2, epochs, err = _kernels.train_single_hidden(
            net.weights[0], net.weights[1], net.prev_weights[0], net.prev_weights[1],
            X, Y, net.eta, net.alpha, float(threshold), int(max_epochs),
        )
        net.weights, net.prev_weights = [W1, W2], [P1, P2]
        net._cache = None
    else:
        epochs, err = 0, np.inf
        while epochs < max_epochs:
            err = 0.0
            for x, y in zip(X, Y):
                e = net.train_step(x, y)
                err += 0.5 * float(e @ e)
            epochs += 1
            if err < threshold:
                break
    if not err < threshold:
        raise NonConvergenceError(
            f"epoch cap {max_epochs} reached with error {err:.6g} >= {threshold}",
            epochs=epochs, final_error=err, net=net,
        )
    return net, int(epochs), float(err)
