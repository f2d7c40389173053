"""Experiment reports: atomic serialization of results as JSON + CSV.

Payload files are written byte-deterministically (same config and seeds give
identical bytes); wall-clock metadata lives only in the report's "meta" block
so reruns stay diffable.  All writes go through a temp-file + rename so a
crashed run never leaves a half-written artifact.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import config_hash


def _atomic_write(path, data, mode="w"):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """CSV with a documented header row; floats rendered with repr precision."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(repr(v))
            elif isinstance(v, (np.floating,)):
                cells.append(repr(float(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_coerce) + "\n")


def _coerce(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


@dataclass
class ExperimentReport:
    """Structured record of one run: config hash, payload, verdicts, files."""

    config: dict
    task: str
    payload: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self):
        return all(self.verdicts.values()) if self.verdicts else True

    def to_dict(self):
        return {
            "version": __version__,
            "config_hash": config_hash(self.config),
            "task": self.task,
            "payload": self.payload,
            "verdicts": self.verdicts,
            "files": self.files,
            "meta": {"wall_time_s": round(self.wall_time, 3),
                     "written_at": time.strftime("%Y-%m-%dT%H:%M:%S")},
        }

    def write(self, out_dir):
        path = os.path.join(out_dir, "report.json")
        write_json(path, self.to_dict())
        return path


def convex_table_rows(table):
    """Rows (v, raw, convexified, sub_lo, sub_hi, trusted) of a 1D ConvexTable."""
    from .effective import subdifferential
    ax = table.axes[0]
    rows = []
    for i, v in enumerate(ax):
        lo, hi = subdifferential(table, float(v))
        rows.append((float(v), float(table.raw[i]), float(table.values[i]),
                     lo, hi, int(bool(table.trusted[i]))))
    return rows


def write_convex_table(path, table):
    write_csv(path, ["axis", "raw", "convexified", "sub_lo", "sub_hi", "trusted"],
              convex_table_rows(table))


def write_grid_function(path, gf):
    """Snapshot CSV with grid metadata in the header comment line."""
    grid = gf.grid
    meta = (f"# dimension={grid.dimension} extent={list(grid.extent)} "
            f"points={list(grid.points)} origin={list(grid.origin)} "
            f"boundary={grid.boundary} time={gf.time_stamp!r}")
    if grid.dimension == 1:
        x = grid.axes()[0]
        body = "\n".join(f"{repr(float(a))},{repr(float(v))}"
                         for a, v in zip(x, gf.values))
        _atomic_write(path, meta + "\nx,u\n" + body + "\n")
    else:
        rows = []
        mesh = grid.mesh()
        it = np.ndindex(*grid.points)
        for idx in it:
            coords = ",".join(repr(float(mesh[d][idx])) for d in range(grid.dimension))
            rows.append(f"{coords},{repr(float(gf.values[idx]))}")
        cols = ",".join(f"x{d}" for d in range(grid.dimension))
        _atomic_write(path, meta + f"\n{cols},u\n" + "\n".join(rows) + "\n")


def emit_plotdata(report_dict, out_dir):
    """One plot-ready CSV per figure kind found in a report payload.

    Emits whichever of these the payload carries: the effective Lagrangian and
    Hamiltonian curves, plateau statistic vs eps, window error vs eps (sorted
    descending for log-log plotting), and Hoelder constants vs eps.  Empty
    ladders produce a header-only CSV.
    """
    payload = report_dict.get("payload", report_dict)
    written = []

    def emit(name, header, rows):
        path = os.path.join(out_dir, name)
        write_csv(path, header, rows)
        written.append(path)

    if "lbar" in payload:
        t = payload["lbar"]
        emit("plot_lbar.csv", ["v", "lbar"],
             list(zip(t["axis"], t["convexified"])))
    if "hbar" in payload:
        t = payload["hbar"]
        emit("plot_hbar.csv", ["p", "hbar"],
             list(zip(t["axis"], t["convexified"])))
    if "plateau" in payload:
        rows = [(r["p"], e, s) for r in payload["plateau"]
                for e, s in zip(r["eps"], r["statistics"])]
        emit("plot_plateau.csv", ["p", "eps", "statistic"], rows)
    if "convergence" in payload:
        rows = sorted(((r["eps"], r["error"]) for r in payload["convergence"]),
                      key=lambda r: -r[0])
        emit("plot_convergence.csv", ["eps", "error"], rows)
    if "holder" in payload:
        h = payload["holder"]
        emit("plot_holder.csv", ["eps", "constant", "alpha"],
             list(zip(h["eps"], h["constants"], h["alpha_per_eps"])))
    return written
