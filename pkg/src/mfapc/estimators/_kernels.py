"""Compiled inner loop for offline training of single-hidden-layer networks.

Arithmetic mirrors ``MLPEstimator.train_step`` sample by sample.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _epoch(W1, W2, P1, P2, X, Y, eta, alpha):
    n_hidden, n_in = W1.shape
    n_out = W2.shape[0]
    a = np.empty(n_hidden)
    err = 0.0
    for s in range(X.shape[0]):
        x = X[s]
        for j in range(n_hidden):
            net = 0.0
            for i in range(n_in):
                net += W1[j, i] * x[i]
            a[j] = 1.0 / (1.0 + np.exp(-net))
        delta = np.empty(n_out)
        for t in range(n_out):
            y = 0.0
            for j in range(n_hidden):
                y += W2[t, j] * a[j]
            e = Y[s, t] - y
            err += 0.5 * e * e
            delta[t] = -e
        dh = np.empty(n_hidden)
        for j in range(n_hidden):
            acc = 0.0
            for t in range(n_out):
                acc += W2[t, j] * delta[t]
            dh[j] = acc * a[j] * (1.0 - a[j])
        for t in range(n_out):
            for j in range(n_hidden):
                w = W2[t, j]
                W2[t, j] = w - eta * (delta[t] * a[j]) + alpha * (w - P2[t, j])
                P2[t, j] = w
        for j in range(n_hidden):
            for i in range(n_in):
                w = W1[j, i]
                W1[j, i] = w - eta * (dh[j] * x[i]) + alpha * (w - P1[j, i])
                P1[j, i] = w
    return err


@njit(cache=True)
def _train(W1, W2, P1, P2, X, Y, eta, alpha, threshold, max_epochs):
    epochs = 0
    err = np.inf
    while epochs < max_epochs:
        err = _epoch(W1, W2, P1, P2, X, Y, eta, alpha)
        epochs += 1
        if err < threshold:
            break
    return epochs, err


def train_single_hidden(W1, W2, P1, P2, X, Y, eta, alpha, threshold, max_epochs):
    W1, W2, P1, P2 = (np.array(a, dtype=np.float64, order="C") for a in (W1, W2, P1, P2))
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    epochs, err = _train(W1, W2, P1, P2, X, Y, float(eta), float(alpha), float(threshold), int(max_epochs))
    return W1, W2, P1, P2, int(epochs), float(err)
