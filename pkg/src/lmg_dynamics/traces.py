"""Level-population traces, distances between them, and their CSV form."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ConfigError


class ModelTag(str, enum.Enum):
    FULL = "Full"
    RATE = "Rate"
    CHAIN_CONST = "ChainConst"
    CHAIN_FIT = "ChainFit"
    CHAIN_EXACT = "ChainExact"


@dataclass(eq=False)
class PopulationTrace:
    """P_i(s) over the recording grid; rows are grid points, columns are levels."""

    grid: np.ndarray
    populations: np.ndarray
    model_tag: ModelTag
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        self.model_tag = ModelTag(self.model_tag)
        if self.populations.shape[0] != self.grid.size:
            raise ConfigError("populations must have one row per grid point")

    @property
    def n_levels(self) -> int:
        return self.populations.shape[1]

    @property
    def final(self) -> np.ndarray:
        return self.populations[-1]

    def at(self, s: float) -> np.ndarray:
        """Population row at the grid point nearest to s."""
        return self.populations[int(np.argmin(np.abs(self.grid - s)))]

    def argmax_levels(self) -> np.ndarray:
        return np.argmax(self.populations, axis=1)


def tvd(p, q) -> float:
    """Total-variation distance, half the L1 distance."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def compare_traces(a: PopulationTrace, b: PopulationTrace) -> dict:
    """Per-s total-variation distance, final distance and argmax-track divergence."""
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid, rtol=0, atol=1e-12):
        raise ConfigError("traces are on different grids")
    if a.n_levels != b.n_levels:
        raise ConfigError(f"traces have {a.n_levels} and {b.n_levels} levels")
    per_s = 0.5 * np.sum(np.abs(a.populations - b.populations), axis=1)
    track = np.abs(a.argmax_levels() - b.argmax_levels())
    return {
        "model_a": a.model_tag.value,
        "model_b": b.model_tag.value,
        "n_levels": a.n_levels,
        "tvd_final": float(per_s[-1]),
        "tvd_mean": float(per_s.mean()),
        "tvd_max": float(per_s.max()),
        "argmax_divergence_max": int(track.max()),
        "argmax_divergence_mean": float(track.mean()),
        "s": [float(v) for v in a.grid],
        "tvd": [float(v) for v in per_s],
    }


def ground_oscillation(trace: PopulationTrace, s_min: float = 0.5) -> dict:
    """Ground-level population swing and turning-point count for s >= s_min."""
    p0 = trace.populations[trace.grid >= s_min, 0]
    if p0.size < 3:
        return {"amplitude": 0.0, "turning_points": 0, "final": float(trace.final[0])}
    d = np.diff(p0)
    d = d[d != 0]
    turns = int(np.sum(np.sign(d[1:]) != np.sign(d[:-1])))
    return {"amplitude": float(p0.max() - p0.min()), "turning_points": turns, "final": float(p0[-1])}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trace_csv(trace: PopulationTrace, path) -> Path:
    path = Path(path)
    L = trace.n_levels
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "level", "x", "population", "model_tag"])
        for k, s in enumerate(trace.grid):
            for i in range(L):
                w.writerow([_fmt(s), i, _fmt(i / (L - 1)), _fmt(trace.populations[k, i]), trace.model_tag.value])
    return path


def read_trace_csv(path) -> PopulationTrace:
    rows = {}
    tags = set()
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(float(rec["s"]), {})[int(rec["level"])] = float(rec["population"])
            tags.add(rec["model_tag"])
    if not rows:
        raise ConfigError(f"{path}: empty trace")
    if len(tags) != 1:
        raise ConfigError(f"{path}: mixed model tags {sorted(tags)}")
    grid = np.array(sorted(rows))
    L = 1 + max(max(r) for r in rows.values())
    pops = np.zeros((grid.size, L))
    for k, s in enumerate(grid):
        for i, p in rows[s].items():
            pops[k, i] = p
    return PopulationTrace(grid, pops, ModelTag(tags.pop()))
