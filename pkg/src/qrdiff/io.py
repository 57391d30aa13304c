"""Run artifacts: series CSV, plot-ready panels, JSON summaries, snapshots."""
from __future__ import annotations

import json
import logging
import os
from pathlib import Path

import numpy as np

from .grid import write_snapshot

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "QRDIFF_OUTPUT_ROOT"
PANELS = ("masses", "energies", "linf")


def output_dir(directory, override=None) -> Path:
    """Resolve the run directory; ``$QRDIFF_OUTPUT_ROOT`` prefixes relative paths."""
    path = Path(override if override is not None else directory)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path


def _g(v) -> str:
    return "%.17g" % v


def series_columns(names, orders) -> list:
    """Fixed column order of ``series.csv``."""
    return (["t"] + [f"mass_{n}" for n in names] + ["weighted_mass"] + [f"linf_{n}" for n in names]
            + [f"L{p}" for p in orders] + ["dissipation_ok"])


def write_series(path, report, dissipation=None) -> list:
    """One row per checkpoint.

    ``dissipation_ok`` is 1 when every monitored order satisfies the
    dissipation inequality on the interval ending at that row (the first row
    is always 1) and -1 when no monitor ran.
    """
    orders = sorted(report.energies)
    cols = series_columns(report.names, orders)
    n = len(report.times)
    if dissipation:
        ok = np.ones(n, dtype=int)
        for res in dissipation.values():
            ok[1:] &= res.satisfied.astype(int)
    else:
        ok = np.full(n, -1)
    lines = [",".join(cols)]
    for k in range(n):
        row = [_g(report.times[k])]
        row += [_g(v) for v in report.masses[k]]
        row.append(_g(report.weighted_mass[k]))
        row += [_g(v) for v in report.linf[k]]
        row += [_g(report.energies[p][k]) for p in orders]
        row.append(str(int(ok[k])))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    return cols


def read_series(path) -> dict:
    """Column name -> array."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {c: data[:, j] for j, c in enumerate(header)}


def emit_plot_data(report, directory, panels=PANELS) -> list:
    """Whitespace-separated column files, one per panel.

    ``masses.dat``: t, then one column per species.  ``energies.dat``: t and
    one column per order; rows with a non-positive value are omitted so the
    file is log-ready.  ``linf.dat``: t and per-species sup norms.
    """
    directory = Path(directory)
    written = []
    for panel in panels:
        if panel == "masses":
            header = ["t"] + list(report.names)
            data = np.column_stack([report.times, report.masses])
        elif panel == "energies":
            orders = sorted(report.energies)
            header = ["t"] + [f"L{p}" for p in orders]
            data = np.column_stack([report.times] + [report.energies[p] for p in orders])
            keep = np.all(data[:, 1:] > 0, axis=1)
            if not np.all(keep):
                log.warning("energies panel: omitted %d rows with non-positive values", int(np.sum(~keep)))
                print(f"notice: energies.dat omits {int(np.sum(~keep))} rows with non-positive values")
            data = data[keep]
        elif panel == "linf":
            header = ["t"] + list(report.names)
            data = np.column_stack([report.times, report.linf])
        else:
            raise ValueError(f"unknown panel {panel!r}; choose from {', '.join(PANELS)}")
        path = directory / f"{panel}.dat"
        np.savetxt(path, data, fmt="%.17g", header=" ".join(header))
        written.append(path)
    return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


class SnapshotSink:
    """Writes QDF1 files at the chosen checkpoint indices."""

    def __init__(self, directory, checkpoints: int, count: int):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        idx = np.unique(np.round(np.linspace(0, checkpoints - 1, count)).astype(int)) if count > 0 else []
        self.wanted = set(int(i) for i in idx)
        self.seen = 0
        self.paths = []

    def __call__(self, state, grid):
        if self.seen in self.wanted:
            path = self.directory / f"snap_{self.seen:05d}.qdf"
            write_snapshot(path, grid, state.u, state.t)
            self.paths.append(path)
        self.seen += 1
