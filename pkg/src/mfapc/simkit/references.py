"""Reference trajectories evaluable at any integer step."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Sinusoid:
    """``offset + amplitude * sin(2 pi (k - shift) / period)``."""

    amplitude: float = 1.0
    period: float = 200.0
    offset: float = 0.0
    shift: float = 0.0

    def __call__(self, k) -> float:
        return self.offset + self.amplitude * math.sin(2.0 * math.pi * (k - self.shift) / self.period)


@dataclass(frozen=True)
class Step:
    level: float = 1.0
    start: int = 0

    def __call__(self, k) -> float:
        return self.level if k >= self.start else 0.0


@dataclass(frozen=True)
class Ramp:
    slope: float = 1.0
    start: int = 0
    offset: float = 0.0

    def __call__(self, k) -> float:
        return self.offset + (self.slope * (k - self.start) if k >= self.start else 0.0)


@dataclass(frozen=True)
class Composite:
    parts: tuple

    def __call__(self, k) -> float:
        return sum(p(k) for p in self.parts)


KINDS = {"sinusoid": Sinusoid, "step": Step, "ramp": Ramp}


@dataclass(frozen=True)
class ReferenceSignal:
    """One scalar generator per plant output."""

    components: tuple

    def __init__(self, components: Sequence):
        object.__setattr__(self, "components", tuple(components))

    @property
    def My(self) -> int:
        return len(self.components)

    def __call__(self, k) -> np.ndarray:
        return np.array([c(k) for c in self.components], dtype=float)

    def horizon(self, k: int, N: int) -> np.ndarray:
        """``[y*(k+1); ...; y*(k+N)]`` from true future samples."""
        return np.concatenate([self(k + i) for i in range(1, N + 1)])


def parse_component(text: str):
    """Parse ``kind:key=value,...`` terms joined by ``+``.

    >>> parse_component("sinusoid:amplitude=1,period=200,shift=1")
    Sinusoid(amplitude=1.0, period=200.0, offset=0.0, shift=1.0)
    """
    parts = []
    for term in text.split("+"):
        term = term.strip()
        kind, _, args = term.partition(":")
        kind = kind.strip()
        if kind not in KINDS:
            raise ValueError(f"unknown reference kind {kind!r}; choose from {sorted(KINDS)}")
        kwargs = {}
        for item in filter(None, (a.strip() for a in args.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"reference argument {item!r} is not key=value")
            kwargs[key.strip()] = float(val)
        try:
            parts.append(KINDS[kind](**kwargs))
        except TypeError as exc:
            raise ValueError(f"bad arguments for {kind}: {exc}") from None
    return parts[0] if len(parts) == 1 else Composite(tuple(parts))


def format_component(comp) -> str:
    if isinstance(comp, Composite):
        return " + ".join(format_component(p) for p in comp.parts)
    kind = {v: k for k, v in KINDS.items()}[type(comp)]
    args = ",".join(f"{name}={float(getattr(comp, name))!r}" for name in comp.__dataclass_fields__)
    return f"{kind}:{args}"
