"""CSV and JSON writers for sweeps, curves and coupling tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .cgc import cgc_x
from .spectral import SpectralSweep


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_sweep_csv(sweep: SpectralSweep, path) -> Path:
    """Columns: s, level, energy, energy_per_spin, x."""
    path = Path(path)
    L = sweep.n_levels
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["s", "level", "energy", "energy_per_spin", "x"])
        for k, s in enumerate(sweep.grid):
            for i in range(L):
                e = sweep.energies[k, i]
                w.writerow([_fmt(s), i, _fmt(e), _fmt(e / sweep.N), _fmt(i / (L - 1))])
    return path


def write_cgc_csv(path, n_points: int = 501) -> Path:
    """Columns: s, x_c on a uniform grid over [0.5, 1]."""
    path = Path(path)
    s = np.linspace(0.5, 1.0, n_points)
    x = cgc_x(s)
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["s", "x_c"])
        for a, b in zip(s, x):
            w.writerow([_fmt(a), _fmt(b)])
    return path


def write_pair_table_csv(grid, table, path, column: str, extra: dict | None = None) -> Path:
    """Long-format table of per-pair values: s, n, <column>[, extra columns]."""
    path = Path(path)
    table = np.asarray(table)
    extra = extra or {}
    with path.open("w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["s", "n", column, *extra])
        for k, s in enumerate(grid):
            for n in range(table.shape[1]):
                w.writerow([_fmt(s), n, _fmt(table[k, n]), *(_fmt(v[k, n]) for v in extra.values())])
    return path


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
