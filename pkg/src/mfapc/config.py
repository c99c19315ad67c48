"""Run configuration as sectioned ``key = value`` text.

Every section and key is fixed; anything unrecognized is an error.  The
writer emits every field in a fixed order with ``repr`` floats, so
``write(read(write(cfg)))`` reproduces the text byte for byte.

Layout::

    [plant]       kind, a, b, blocks
    [controller]  N, Nu, L, lambda, pseudo_inverse_fallback, double_integrator_mode, iterations
    [estimator]   kind, init, hidden, eta, alpha, checkpoint, fd_step
    [tuner]       enabled, init, eta, alpha, lam_eta, lam_alpha
    [reference]   y1, y2, ...   (one generator per plant output)
    [run]         steps, seed, y0, u0
    [training]    u1, u2, ..., samples, threshold, max_epochs, use_kernel

``blocks`` lists coefficient matrices as ``row;row|row;row`` with comma
separated entries.  Reference and training inputs use the generator syntax
``kind:key=value,...`` joined by ``+``.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import get_type_hints

import numpy as np

from .controller import ControllerConfig
from .errors import MFAPCError
from .simkit.loop import ESTIMATOR_KINDS
from .simkit.references import parse_component


class ConfigError(MFAPCError, ValueError):
    """A configuration field is missing, unknown or invalid."""

    def __init__(self, message: str, fields: tuple = ()):
        super().__init__(message)
        self.fields = tuple(fields)


@dataclass(frozen=True)
class PlantSection:
    kind: str = "example13"
    a: float = 1.1
    b: float = 1.0
    blocks: str = ""


@dataclass(frozen=True)
class ControllerSection:
    N: int = 2
    Nu: int = 2
    L: int = 2
    lam: tuple = (0.01,)
    pseudo_inverse_fallback: bool = False
    double_integrator_mode: bool = False
    iterations: int = 1


@dataclass(frozen=True)
class EstimatorSection:
    kind: str = "true"
    init: str = "example"
    hidden: tuple = (6,)
    eta: float = 0.5
    alpha: float = 0.05
    checkpoint: str = ""
    fd_step: float = 1e-5


@dataclass(frozen=True)
class TunerSection:
    enabled: bool = False
    init: str = "example13"
    eta: float = 0.5
    alpha: float = 0.05
    lam_eta: float = 0.5
    lam_alpha: float = 0.0


@dataclass(frozen=True)
class RunSection:
    steps: int = 500
    seed: int = 0
    y0: tuple = ()
    u0: tuple = ()


@dataclass(frozen=True)
class TrainingSection:
    inputs: tuple = ()
    samples: int = 900
    threshold: float = 0.002
    max_epochs: int = 75000
    use_kernel: bool = True


@dataclass(frozen=True)
class RunConfig:
    plant: PlantSection = field(default_factory=PlantSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    estimator: EstimatorSection = field(default_factory=EstimatorSection)
    tuner: TunerSection = field(default_factory=TunerSection)
    reference: tuple = ("step:level=1.0,start=0.0", "step:level=1.0,start=0.0")
    run: RunSection = field(default_factory=RunSection)
    training: TrainingSection = field(default_factory=TrainingSection)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, run=replace(self.run, seed=int(seed)))

    def controller_config(self) -> ControllerConfig:
        c = self.controller
        lam = c.lam[0] if len(c.lam) == 1 else c.lam
        return ControllerConfig(c.N, c.Nu, c.L, lam, c.pseudo_inverse_fallback, c.double_integrator_mode)


# section name -> (attribute, dataclass); reference and training inputs are keyed lists
_SECTIONS = {
    "plant": PlantSection,
    "controller": ControllerSection,
    "estimator": EstimatorSection,
    "tuner": TunerSection,
    "run": RunSection,
    "training": TrainingSection,
}
# file key -> attribute where they differ
_KEY_ALIASES = {("controller", "lambda"): "lam"}
_LIST_KEYS = {"reference": ("y", "reference"), "training": ("u", "inputs")}


def _key_for(section: str, attr: str) -> str:
    for (sec, key), a in _KEY_ALIASES.items():
        if sec == section and a == attr:
            return key
    return attr


def _attr_for(section: str, key: str) -> str:
    return _KEY_ALIASES.get((section, key), key)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _parse(raw: str, hint, name: str, default):
    raw = raw.strip()
    try:
        if hint is bool:
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError("expected true or false")
            return low == "true"
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is tuple:
            if not raw:
                return ()
            kind = int if default and isinstance(default[0], int) else float
            return tuple(kind(v) for v in raw.split(","))
        return raw
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} ({exc})", (name,)) from None


def dumps(cfg: RunConfig) -> str:
    """Canonical text for ``cfg``."""
    out = io.StringIO()
    first = True
    for section in ("plant", "controller", "estimator", "tuner", "reference", "run", "training"):
        if not first:
            out.write("\n")
        first = False
        out.write(f"[{section}]\n")
        if section == "reference":
            for i, spec in enumerate(cfg.reference):
                out.write(f"y{i + 1} = {spec}\n")
            continue
        sec = getattr(cfg, section)
        if section == "training":
            for i, spec in enumerate(sec.inputs):
                out.write(f"u{i + 1} = {spec}\n")
        for f in fields(sec):
            if section == "training" and f.name == "inputs":
                continue
            out.write(f"{_key_for(section, f.name)} = {_format(getattr(sec, f.name))}\n")
    return out.getvalue()


def _indexed(section: str, prefix: str, items: dict) -> tuple:
    found = {}
    for key in list(items):
        if key.startswith(prefix) and key[len(prefix):].isdigit():
            found[int(key[len(prefix):])] = items.pop(key)
    if sorted(found) != list(range(1, len(found) + 1)):
        raise ConfigError(f"[{section}] {prefix}N keys must run 1..n without gaps", (section,))
    return tuple(found[i].strip() for i in sorted(found))


def loads(text: str) -> RunConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (N vs n)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = set(_SECTIONS) | {"reference"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(known)}", (section,))

    kwargs = {}
    reference = None
    if parser.has_section("reference"):
        items = dict(parser.items("reference"))
        reference = _indexed("reference", "y", items)
        if items:
            raise ConfigError(f"unknown key(s) in [reference]: {sorted(items)}", tuple(f"reference.{k}" for k in items))
    for section, cls in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        items = dict(parser.items(section))
        values = {}
        if section == "training":
            values["inputs"] = _indexed("training", "u", items)
        hints = get_type_hints(cls)
        defaults = cls()
        names = {f.name for f in fields(cls)}
        for key, raw in items.items():
            attr = _attr_for(section, key)
            if attr not in names or (section == "training" and attr == "inputs"):
                raise ConfigError(f"unknown key {section}.{key}", (f"{section}.{key}",))
            values[attr] = _parse(raw, hints[attr], f"{section}.{key}", getattr(defaults, attr))
        kwargs[section] = cls(**values)
    if reference is not None:
        kwargs["reference"] = reference
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Field-level checks; raises :class:`ConfigError` naming the offending fields."""
    c = cfg.controller
    for name in ("N", "Nu", "L", "iterations"):
        if getattr(c, name) < 1:
            raise ConfigError(f"controller.{name} must be >= 1, got {getattr(c, name)}", (f"controller.{name}",))
    if c.Nu > c.N:
        raise ConfigError(
            f"controller.Nu={c.Nu} exceeds controller.N={c.N}; the control horizon cannot pass the prediction horizon",
            ("controller.Nu", "controller.N"),
        )
    if not c.lam:
        raise ConfigError("controller.lambda needs at least one value", ("controller.lambda",))
    e = cfg.estimator
    if e.kind not in ESTIMATOR_KINDS:
        raise ConfigError(f"estimator.kind {e.kind!r} is not one of {ESTIMATOR_KINDS}", ("estimator.kind",))
    if e.init not in ("example", "random"):
        raise ConfigError(f"estimator.init must be 'example' or 'random', got {e.init!r}", ("estimator.init",))
    if not e.fd_step > 0:
        raise ConfigError("estimator.fd_step must be positive", ("estimator.fd_step",))
    if cfg.tuner.init not in ("example13", "random"):
        raise ConfigError(f"tuner.init must be 'example13' or 'random', got {cfg.tuner.init!r}", ("tuner.init",))
    if cfg.run.steps < 1:
        raise ConfigError("run.steps must be >= 1", ("run.steps",))
    if not cfg.reference:
        raise ConfigError("[reference] needs at least y1", ("reference",))
    for i, spec in enumerate(cfg.reference):
        try:
            parse_component(spec)
        except ValueError as exc:
            raise ConfigError(f"reference.y{i + 1}: {exc}", (f"reference.y{i + 1}",)) from None
    for i, spec in enumerate(cfg.training.inputs):
        try:
            parse_component(spec)
        except ValueError as exc:
            raise ConfigError(f"training.u{i + 1}: {exc}", (f"training.u{i + 1}",)) from None
    if not cfg.training.threshold > 0:
        raise ConfigError("training.threshold must be positive", ("training.threshold",))
    if cfg.training.samples < 1 or cfg.training.max_epochs < 1:
        raise ConfigError("training.samples and training.max_epochs must be >= 1", ("training.samples",))
    if cfg.plant.blocks:
        try:
            parse_blocks(cfg.plant.blocks)
        except ValueError as exc:
            raise ConfigError(f"plant.blocks: {exc}", ("plant.blocks",)) from None


def parse_blocks(text: str) -> np.ndarray:
    """``"1,0.4;0.8,1.2|0.5,0.6;0.4,0.7"`` -> array of shape ``(2, 2, 2)``."""
    mats = []
    for block in text.split("|"):
        rows = [[float(v) for v in row.split(",")] for row in block.split(";")]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("ragged coefficient block")
        mats.append(rows)
    arr = np.array(mats, dtype=float)
    if arr.ndim != 3:
        raise ValueError("coefficient blocks must share one shape")
    return arr


def format_blocks(blocks) -> str:
    arr = np.asarray(blocks, dtype=float)
    return "|".join(";".join(",".join(repr(float(v)) for v in row) for row in b) for b in arr)


def read_config(path) -> RunConfig:
    return loads(Path(path).read_text())


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps(cfg))
