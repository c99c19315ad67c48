"""Bit-exact ``.npz`` checkpoints for estimators and the lambda tuner."""
from __future__ import annotations

import numpy as np

from .mlp import MLPEstimator
from .rbf import RBFEstimator
from .tuner import LambdaTuner

FORMAT_VERSION = 1


def _mlp_arrays(net: MLPEstimator, prefix="") -> dict:
    out = {f"{prefix}n_layers": np.array(len(net.weights)), f"{prefix}eta": np.array(net.eta),
           f"{prefix}alpha": np.array(net.alpha)}
    for i, (w, p) in enumerate(zip(net.weights, net.prev_weights)):
        out[f"{prefix}w{i}"] = w
        out[f"{prefix}p{i}"] = p
    return out


def _mlp_from(data, prefix="") -> MLPEstimator:
    n = int(data[f"{prefix}n_layers"])
    return MLPEstimator(
        [data[f"{prefix}w{i}"] for i in range(n)],
        eta=float(data[f"{prefix}eta"]),
        alpha=float(data[f"{prefix}alpha"]),
        prev_weights=[data[f"{prefix}p{i}"] for i in range(n)],
    )


def save_checkpoint(path, model) -> None:
    arrays = {"format_version": np.array(FORMAT_VERSION)}
    if isinstance(model, MLPEstimator):
        arrays["kind"] = np.array("mlp")
        arrays.update(_mlp_arrays(model))
    elif isinstance(model, RBFEstimator):
        arrays.update(
            kind=np.array("rbf"), centers=model.centers, radii=model.radii, out_weights=model.out_weights,
            prev_centers=model.prev_centers, prev_radii=model.prev_radii,
            prev_out_weights=model.prev_out_weights, eta=np.array(model.eta), alpha=np.array(model.alpha),
            radius_clamped=np.array(model.radius_clamped),
        )
    elif isinstance(model, LambdaTuner):
        arrays.update(
            kind=np.array("tuner"), lam=model.lam, lam_prev=model.lam_prev, lam_prev2=model.lam_prev2,
            eta=np.array(model.eta), alpha=np.array(model.alpha), cost_weights=model.cost_weights,
            steps=np.array(model.steps),
        )
        arrays.update(_mlp_arrays(model.net, prefix="net_"))
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        kind = str(data["kind"])
        if kind == "mlp":
            return _mlp_from(data)
        if kind == "rbf":
            net = RBFEstimator(
                data["centers"], data["radii"], data["out_weights"], float(data["eta"]), float(data["alpha"]),
                prev=(data["prev_centers"], data["prev_radii"], data["prev_out_weights"]),
            )
            net.radius_clamped = bool(data["radius_clamped"])
            return net
        if kind == "tuner":
            tuner = LambdaTuner(_mlp_from(data, "net_"), data["lam"], float(data["eta"]), float(data["alpha"]),
                                data["cost_weights"])
            tuner.lam_prev = np.array(data["lam_prev"])
            tuner.lam_prev2 = np.array(data["lam_prev2"])
            tuner.steps = int(data["steps"])
            return tuner
        raise ValueError(f"unknown checkpoint kind {kind!r}")
