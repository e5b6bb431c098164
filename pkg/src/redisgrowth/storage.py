"""CSV outputs, sweep checkpoints and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .estimator import EnsembleSummary
from .eta import EtaSpec
from .sweep import CellKey, GrowthSurface, PolicyCurves, SweepGrid, ZoneBoundary

SURFACE_COLUMNS = [
    "scheme", "mean_eta", "geomean_eta", "N", "b", "a", "avg_g", "finite_count",
    "mean_log_g", "log_g_stderr", "scale",
]


class CheckpointError(OSError):
    pass


def fmt(v) -> str:
    """Shortest text that parses back to the same value; '' for missing."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def write_csv(path: Path, header: list[str], rows: Iterable[Iterable]):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if not isinstance(x, str) else x for x in row])
    os.replace(tmp, path)


def _opt_float(text: str) -> float:
    return float(text) if text != "" else math.nan


# -- surfaces -------------------------------------------------------------

def surface_rows(surfaces: Iterable[GrowthSurface]):
    for s in surfaces:
        for bi, b in enumerate(s.b_values):
            for ai, a in enumerate(s.a_values):
                m = s.mean_log_g[bi, ai]
                yield [
                    s.scheme, s.spec.mean, s.spec.geomean, s.N, b, a,
                    math.exp(m) if not math.isnan(m) else None,
                    s.finite_counts[bi, ai], m, s.log_g_stderr[bi, ai], s.spec.scale,
                ]


def write_surfaces(path: Path, surfaces: Iterable[GrowthSurface]):
    write_csv(path, SURFACE_COLUMNS, surface_rows(surfaces))


def read_surfaces(path: Path) -> list[GrowthSurface]:
    """Rebuild surfaces from a surfaces CSV (grid taken from the rows)."""
    groups: dict[tuple, list[dict]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SURFACE_COLUMNS[:8]) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            scale = float(row["scale"]) if row.get("scale") else 1.0
            key = (row["scheme"], float(row["mean_eta"]), float(row["geomean_eta"]), scale, int(row["N"]))
            groups.setdefault(key, []).append(row)
    out = []
    for (scheme, mean, geo, scale, n), rows in groups.items():
        a_vals = np.array(sorted({float(r["a"]) for r in rows}))
        b_vals = np.array(sorted({float(r["b"]) for r in rows}))
        shape = (b_vals.size, a_vals.size)
        surf = GrowthSurface(
            scheme=scheme, spec=EtaSpec(mean, geo, scale), N=n,
            a_values=a_vals, b_values=b_vals,
            mean_log_g=np.full(shape, np.nan), log_g_stderr=np.full(shape, np.nan),
            finite_counts=np.zeros(shape, dtype=np.int64),
        )
        ai = {v: i for i, v in enumerate(a_vals)}
        bi = {v: i for i, v in enumerate(b_vals)}
        for r in rows:
            i, j = bi[float(r["b"])], ai[float(r["a"])]
            surf.finite_counts[i, j] = int(r["finite_count"])
            if r.get("mean_log_g"):
                surf.mean_log_g[i, j] = float(r["mean_log_g"])
            elif r["avg_g"]:
                surf.mean_log_g[i, j] = math.log(float(r["avg_g"]))
            surf.log_g_stderr[i, j] = _opt_float(r.get("log_g_stderr", ""))
        out.append(surf)
    return out


# -- curves and boundaries ------------------------------------------------

CURVE_COLUMNS = [
    "scheme", "mean_eta", "geomean_eta", "N", "b", "a_opt", "a_opt_smooth",
    "g_max", "gov_opttax", "gov_opttax_raw", "is_b_star",
]


def write_curves(path: Path, curves: Iterable[PolicyCurves]):
    def rows():
        for c in curves:
            sp = c.meta["spec"]
            for i, b in enumerate(c.b_values):
                yield [
                    c.meta["scheme"], sp.mean, sp.geomean, c.meta["N"], b, c.a_opt[i],
                    c.a_opt_smooth[i], c.g_max[i], c.gov_opttax[i], c.gov_opttax_raw[i],
                    bool(c.b_star is not None and b == c.b_star),
                ]
    write_csv(path, CURVE_COLUMNS, rows())


BOUNDARY_COLUMNS = ["scheme", "mean_eta", "geomean_eta", "N", "kind", "b", "a"]


def write_boundaries(path: Path, items: Iterable[tuple[GrowthSurface, ZoneBoundary]]):
    def rows():
        for s, zb in items:
            head = [s.scheme, s.spec.mean, s.spec.geomean, s.N]
            for b, a in zb.points:
                yield head + ["crossing", b, a]
            for b, a in zb.trivial_bound:
                yield head + ["trivial_bound", b, a]
    write_csv(path, BOUNDARY_COLUMNS, rows())


# -- checkpoint -----------------------------------------------------------

def grid_record(grid: SweepGrid) -> dict:
    return {
        "a_values": list(grid.a_values),
        "b_values": list(grid.b_values),
        "schemes": list(grid.schemes),
        "specs": [[s.mean, s.geomean, s.scale] for s in grid.specs],
        "N_values": list(grid.N_values),
        "T": grid.T,
        "samples": grid.samples,
        "base_seed": grid.base_seed,
    }


class Checkpoint:
    """Append-only JSON-lines log of finished sweep cells.

    The first line describes the grid; each further line is one cell. Lines
    are flushed and fsynced as they are written, so an interruption loses at
    most the line being written.
    """

    def __init__(self, path: Path, grid: SweepGrid):
        self.path = Path(path)
        self.grid = grid
        self._fh = None

    def load(self) -> dict[CellKey, EnsembleSummary]:
        if not self.path.exists():
            return {}
        done = {}
        with open(self.path, "rb") as fh:
            raw = fh.read()
        lines = raw.split(b"\n")
        torn = lines[-1]  # empty when the file ends with a newline
        lines = lines[:-1]
        if torn:
            print(f"warning: {self.path}: dropping incomplete final record", file=sys.stderr)
            with open(self.path, "wb") as fh:
                fh.write(raw[: len(raw) - len(torn)])
        if not lines:
            return {}
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as e:
            raise CheckpointError(f"{self.path}: corrupt header: {e}") from None
        if header.get("kind") != "header" or header.get("grid") != grid_record(self.grid):
            raise CheckpointError(f"{self.path}: checkpoint was written for a different grid")
        for no, line in enumerate(lines[1:], start=2):
            try:
                rec = json.loads(line)
                key = CellKey(*rec["key"])
                done[key] = EnsembleSummary(
                    sample_count=rec["sample_count"], finite_count=rec["finite_count"],
                    mean_log_g=rec["mean_log_g"], log_g_stderr=rec["log_g_stderr"],
                    log_g=np.empty(0),
                )
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise CheckpointError(f"{self.path}:{no}: corrupt record: {e}") from None
        return done

    def open(self):
        if self._fh is not None:
            return
        new = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a")
        if new:
            self._line({"kind": "header", "grid": grid_record(self.grid)})

    def _line(self, obj: dict):
        self._fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def append(self, key: CellKey, s: EnsembleSummary):
        self.open()
        self._line({
            "kind": "cell", "key": [int(k) for k in key], "sample_count": s.sample_count,
            "finite_count": s.finite_count, "mean_log_g": s.mean_log_g,
            "log_g_stderr": s.log_g_stderr,
        })

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


# -- manifest -------------------------------------------------------------

def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: Path, *, version: str, command: str, seed: int, config: dict,
                   outputs: Iterable[Path], backend: str, extra: Optional[dict] = None):
    manifest = {
        "tool": "redisgrowth",
        "version": version,
        "command": command,
        "base_seed": seed,
        "backend": backend,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, path)
