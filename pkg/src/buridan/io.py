"""CSV and JSON readers/writers for trajectories, observations and reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .errors import DomainError
from .estimators import EstimationReport
from .hybrid_sim import ObservationSeries, PolygonTargets, Trajectory

PathLike = Union[str, Path]
_COORDS = ("x", "y", "z")


def _fmt(x: float) -> str:
    return "%.17g" % x


def _coord_names(dim: int):
    if dim > len(_COORDS):
        raise DomainError(f"cannot name {dim} coordinates")
    return list(_COORDS[:dim])


def write_trajectory_csv(traj: Trajectory, path: PathLike) -> None:
    header = ["t", *_coord_names(traj.dim), "state"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, p, s in zip(traj.times, traj.positions, traj.states):
            w.writerow([_fmt(t), *map(_fmt, p), int(s)])


def write_observations_csv(obs: Union[ObservationSeries, Trajectory], path: PathLike) -> None:
    pos = np.asarray(obs.positions, dtype=float).reshape(len(obs.times), -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *_coord_names(pos.shape[1])])
        for t, p in zip(obs.times, pos):
            w.writerow([_fmt(t), *map(_fmt, p)])


def read_table(path: PathLike) -> Dict[str, np.ndarray]:
    """Column name to array for a headed numeric CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if "t" not in header or "x" not in header:
        raise DomainError(f"{path}: expected columns t,x[,y][,state], got {header}")
    try:
        data = np.array(body, dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise DomainError(f"{path}: malformed numeric data") from exc
    return {name: data[:, k] for k, name in enumerate(header)}


def _positions(cols: Dict[str, np.ndarray]) -> np.ndarray:
    names = [c for c in _COORDS if c in cols]
    return np.column_stack([cols[c] for c in names])


def read_observations_csv(path: PathLike) -> ObservationSeries:
    cols = read_table(path)
    return ObservationSeries(cols["t"], _positions(cols))


def read_trajectory_csv(path: PathLike, v: float, targets: Optional[PolygonTargets] = None) -> Trajectory:
    cols = read_table(path)
    if "state" not in cols:
        raise DomainError(f"{path}: no state column")
    pos = _positions(cols)
    if targets is None:
        targets = PolygonTargets.line() if pos.shape[1] == 1 else PolygonTargets.triangle()
    return Trajectory(cols["t"], pos, cols["state"].astype(np.int64), v, targets)


def write_json(data: Any, path: PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def write_report(report: EstimationReport, path: PathLike) -> None:
    write_json(report.to_json(), path)


def read_report(path: PathLike) -> EstimationReport:
    with open(path) as fh:
        return EstimationReport.from_json(json.load(fh))
