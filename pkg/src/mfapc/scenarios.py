"""Turn a :class:`RunConfig` into a closed-loop run, plus the built-in example presets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    ConfigError,
    ControllerSection,
    EstimatorSection,
    PlantSection,
    RunConfig,
    RunSection,
    TrainingSection,
    TunerSection,
    parse_blocks,
)
from .estimators import LambdaTuner, MLPEstimator, RBFEstimator, load_checkpoint, train_offline
from .simkit.loop import generate_training_data, make_estimator, run_closed_loop
from .simkit.plants import Plant, make_plant
from .simkit.references import ReferenceSignal, parse_component
from .simkit.trace import SimTrace


def build_plant(cfg: RunConfig) -> Plant:
    p = cfg.plant
    if p.kind in ("linear", "fir"):
        if not p.blocks:
            raise ConfigError(f"plant.kind={p.kind} needs plant.blocks", ("plant.blocks",))
        return make_plant(p.kind, blocks=parse_blocks(p.blocks))
    if p.kind == "remark2":
        return make_plant("remark2", a=p.a, b=p.b)
    try:
        return make_plant(p.kind)
    except ValueError as exc:
        raise ConfigError(f"plant.kind: {exc}", ("plant.kind",)) from None


def build_reference(cfg: RunConfig) -> ReferenceSignal:
    return ReferenceSignal([parse_component(s) for s in cfg.reference])


def training_data(cfg: RunConfig, plant: Plant):
    """Open-loop dataset from the ``[training]`` input generators."""
    t = cfg.training
    if len(t.inputs) != plant.Mu:
        raise ConfigError(f"[training] needs u1..u{plant.Mu} for this plant, got {len(t.inputs)}", ("training",))
    gens = [parse_component(s) for s in t.inputs]
    return generate_training_data(plant, lambda k: np.array([g(k) for g in gens]), t.samples, cfg.controller.L)


def build_network(cfg: RunConfig, plant: Plant):
    """Initial estimator network for the configured kind (``None`` for model-based kinds)."""
    e, L, seed = cfg.estimator, cfg.controller.L, cfg.run.seed
    if e.checkpoint:
        return load_checkpoint(e.checkpoint)
    n_in = L * plant.Mu
    if e.kind.startswith("mlp"):
        if e.init == "example":
            if (n_in, plant.My) != (4, 1) or tuple(e.hidden) != (6,):
                raise ConfigError("estimator.init=example needs a 4-input, 6-hidden, 1-output network", ("estimator.init",))
            return MLPEstimator.example_11(eta=e.eta, alpha=e.alpha)
        return MLPEstimator.random(n_in, list(e.hidden), plant.My, rng=seed, eta=e.eta, alpha=e.alpha)
    if e.kind == "rbf-online":
        n_nodes = int(e.hidden[0])
        if e.init == "example":
            return RBFEstimator.example_12(rng=seed, n_inputs=n_in, n_nodes=n_nodes, n_outputs=plant.My,
                                           eta=e.eta, alpha=e.alpha)
        return RBFEstimator.random(n_in, n_nodes, plant.My, rng=seed, eta=e.eta, alpha=e.alpha)
    return None


def train_network(cfg: RunConfig, plant: Plant, net: MLPEstimator):
    """Offline training per ``[training]``; returns ``(net, epochs, final_error)``."""
    X, Y = training_data(cfg, plant)
    t = cfg.training
    return train_offline(net, X, Y, t.threshold, t.max_epochs, use_kernel=t.use_kernel)


def build_tuner(cfg: RunConfig, plant: Plant):
    t = cfg.tuner
    if not t.enabled:
        return None
    c = cfg.controller
    n = c.Nu * plant.Mu
    lam0 = np.zeros(n) if t.init == "example13" else np.broadcast_to(np.asarray(c.lam, float), (n,)).copy()
    if t.init == "example13":
        tuner = LambdaTuner.example_13(Nu=c.Nu, Mu=plant.Mu, My=plant.My, eta=t.eta, alpha=t.alpha,
                                       lam_eta=t.lam_eta, lam_alpha=t.lam_alpha)
    else:
        net = MLPEstimator.random(n, [6], plant.My, rng=cfg.run.seed, eta=t.eta, alpha=t.alpha)
        tuner = LambdaTuner(net, lam0, eta=t.lam_eta, alpha=t.lam_alpha)
    return tuner


@dataclass
class RunResult:
    trace: SimTrace
    plant: Plant
    training: tuple | None = None  # (epochs, final_error) when the network was trained here


def execute(cfg: RunConfig) -> RunResult:
    """Build everything ``cfg`` describes and run the closed loop."""
    plant = build_plant(cfg)
    reference = build_reference(cfg)
    if reference.My != plant.My:
        raise ConfigError(f"[reference] has {reference.My} outputs, plant {plant.name} has {plant.My}", ("reference",))
    ccfg = cfg.controller_config()
    net = build_network(cfg, plant)
    training = None
    if cfg.estimator.kind == "mlp-offline" and not cfg.estimator.checkpoint:
        net, epochs, err = train_network(cfg, plant, net)
        training = (epochs, err)
    est = make_estimator(cfg.estimator.kind, plant, ccfg.L, net=net, seed=cfg.run.seed, fd_step=cfg.estimator.fd_step)
    r = cfg.run
    trace = run_closed_loop(
        plant, ccfg, reference, r.steps,
        estimator=est,
        tuner=build_tuner(cfg, plant),
        y0=r.y0 or None,
        u0=r.u0 or None,
        seed=r.seed,
        iterations=cfg.controller.iterations,
    )
    return RunResult(trace, plant, training)


_EXAMPLE_STEPS = 800
_EX11_TRAINING = TrainingSection(
    inputs=("sinusoid:amplitude=0.9,period=200.0,offset=0.0,shift=0.0",
            "sinusoid:amplitude=0.6,period=200.0,offset=0.0,shift=0.0"),
    samples=900,
    threshold=0.002,
    max_epochs=75000,
)

PRESETS = {
    "1.1": RunConfig(
        plant=PlantSection(kind="example11"),
        controller=ControllerSection(N=2, Nu=2, L=2, lam=(0.01,)),
        estimator=EstimatorSection(kind="mlp-offline", init="example", hidden=(6,), eta=0.5, alpha=0.05),
        # y*(k) = sin(pi (k - 1) / 100)
        reference=("sinusoid:amplitude=1.0,period=200.0,offset=0.0,shift=1.0",),
        run=RunSection(steps=_EXAMPLE_STEPS, seed=0),
        training=_EX11_TRAINING,
    ),
    "1.2": RunConfig(
        plant=PlantSection(kind="example11"),
        controller=ControllerSection(N=2, Nu=2, L=2, lam=(0.01,)),
        estimator=EstimatorSection(kind="rbf-online", init="example", hidden=(6,), eta=0.5, alpha=0.05),
        reference=("sinusoid:amplitude=1.0,period=200.0,offset=1.0,shift=0.0",),
        run=RunSection(steps=_EXAMPLE_STEPS, seed=0),
    ),
    "1.3": RunConfig(
        plant=PlantSection(kind="example13"),
        controller=ControllerSection(N=2, Nu=2, L=2, lam=(0.0,)),
        estimator=EstimatorSection(kind="true"),
        tuner=TunerSection(enabled=True, init="example13", eta=0.5, alpha=0.05, lam_eta=0.5, lam_alpha=0.0),
        reference=("sinusoid:amplitude=1.0,period=200.0,offset=0.0,shift=0.0",
                   "sinusoid:amplitude=1.0,period=20.0,offset=0.0,shift=0.0"),
        run=RunSection(steps=_EXAMPLE_STEPS, seed=0),
    ),
    "remark2": RunConfig(
        plant=PlantSection(kind="remark2", a=1.1, b=1.0),
        controller=ControllerSection(N=2, Nu=2, L=3, lam=(0.01,)),
        estimator=EstimatorSection(kind="true"),
        reference=("step:level=1.0,start=0.0",),
        run=RunSection(steps=200, seed=0),
    ),
}


def preset(example_id: str) -> RunConfig:
    try:
        return PRESETS[example_id]
    except KeyError:
        raise ConfigError(f"unknown example {example_id!r}; choose from {sorted(PRESETS)}", ("example",)) from None
