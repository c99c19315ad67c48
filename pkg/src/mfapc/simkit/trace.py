"""Per-step simulation records and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _fmt(x: float) -> str:
    # repr round-trips float64 exactly
    return repr(float(x))


@dataclass
class SimTrace:
    """Signals recorded at each step ``k``: ``y(k)``, ``y*(k)``, ``u(k)``, ``e(k) = y*(k) - y(k)``.

    ``phi`` holds the flattened PJM used at step ``k`` (block, row, column
    order) and ``lam`` the weight vector used at step ``k``.
    """

    k: np.ndarray
    y: np.ndarray
    yref: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    lam: np.ndarray
    L: int = 1
    diverged: bool = False
    diverged_at: int | None = None
    notes: list = field(default_factory=list)

    @property
    def e(self) -> np.ndarray:
        return self.yref - self.y

    @property
    def steps(self) -> int:
        return self.k.size

    @property
    def My(self) -> int:
        return self.y.shape[1]

    @property
    def Mu(self) -> int:
        return self.u.shape[1]

    def rms_error(self, skip: int = 100) -> float:
        """RMS of ``e`` over all outputs, excluding the first ``skip`` steps."""
        e = self.e[skip:]
        if e.size == 0:
            return float("nan")
        return float(np.sqrt(np.mean(e ** 2)))

    def max_abs_error(self, skip: int = 0) -> float:
        e = self.e[skip:]
        return float(np.max(np.abs(e))) if e.size else float("nan")

    def max_abs_y(self) -> float:
        return float(np.max(np.abs(self.y))) if self.y.size else float("nan")

    def pjm_blocks(self) -> np.ndarray:
        """``phi`` reshaped to ``(steps, L, My, Mu)``."""
        return self.phi.reshape(self.steps, self.L, self.My, self.Mu)

    def header(self) -> list[str]:
        My, Mu = self.My, self.Mu
        cols = ["k"]
        cols += [f"y_{i + 1}" for i in range(My)]
        cols += [f"yref_{i + 1}" for i in range(My)]
        cols += [f"u_{j + 1}" for j in range(Mu)]
        cols += [f"e_{i + 1}" for i in range(My)]
        cols += [f"phi_{b + 1}_{i + 1}_{j + 1}" for b in range(self.L) for i in range(My) for j in range(Mu)]
        cols += [f"lambda_{j + 1}" for j in range(self.lam.shape[1])]
        return cols

    def to_csv(self, dest=None) -> str:
        """Write the trace as CSV; returns the text and also writes it when ``dest`` is a path."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        e = self.e
        for n in range(self.steps):
            row = [str(int(self.k[n]))]
            for arr in (self.y[n], self.yref[n], self.u[n], e[n], self.phi[n], self.lam[n]):
                row.extend(_fmt(v) for v in arr)
            w.writerow(row)
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "SimTrace":
        text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))

        def cols(prefix):
            return [i for i, h in enumerate(header) if h.startswith(prefix + "_")]

        iy, ir, iu = cols("y"), cols("yref"), cols("u")
        iphi, ilam = cols("phi"), cols("lambda")
        L = max((int(header[i].split("_")[1]) for i in iphi), default=1)
        return cls(
            k=data[:, 0].astype(int),
            y=data[:, iy],
            yref=data[:, ir],
            u=data[:, iu],
            phi=data[:, iphi],
            lam=data[:, ilam],
            L=L,
        )
