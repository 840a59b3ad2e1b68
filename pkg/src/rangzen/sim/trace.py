"""Mobility traces: normalized CSV import/export and random-waypoint synthesis."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRACE_HEADER = ["node_id", "t_seconds", "x_m", "y_m"]


class TraceError(ValueError):
    pass


@dataclass
class MobilityTrace:
    """Positions on a shared uniform time axis.

    ``x`` and ``y`` have shape ``(n_steps, n_nodes)``; NaN marks a node that
    is not present at that step (outside its own sampled interval).
    """

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    node_ids: list
    dt: float

    @property
    def n_nodes(self) -> int:
        return self.x.shape[1] if self.x.ndim == 2 else 0

    @property
    def n_steps(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self.times) else 0.0

    def bounds(self):
        if self.n_nodes == 0 or self.n_steps == 0:
            return (0.0, 0.0, 0.0, 0.0)
        return (
            float(np.nanmin(self.x)),
            float(np.nanmin(self.y)),
            float(np.nanmax(self.x)),
            float(np.nanmax(self.y)),
        )

    def present(self, step: int) -> np.ndarray:
        return ~np.isnan(self.x[step])

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for j, nid in enumerate(self.node_ids):
                for s in range(self.n_steps):
                    if not np.isnan(self.x[s, j]):
                        w.writerow([nid, repr(float(self.times[s])), repr(float(self.x[s, j])),
                                    repr(float(self.y[s, j]))])


def _resample(samples, grid):
    t = np.array([s[0] for s in samples])
    xs = np.array([s[1] for s in samples])
    ys = np.array([s[2] for s in samples])
    x = np.interp(grid, t, xs)
    y = np.interp(grid, t, ys)
    outside = (grid < t[0] - 1e-9) | (grid > t[-1] + 1e-9)
    x[outside] = np.nan
    y[outside] = np.nan
    return x, y


def load_trace(path, dt: float = 30.0, fmt: str = "normalized_csv") -> MobilityTrace:
    """Read ``node_id,t_seconds,x_m,y_m`` rows and resample to a uniform ``dt``.

    Rows for one node must have strictly increasing timestamps; nodes may
    be interleaved. Errors name the offending line.
    """
    if fmt != "normalized_csv":
        raise TraceError(f"unsupported trace format {fmt!r}")
    if dt <= 0:
        raise TraceError("dt must be positive")
    per_node: dict[str, list] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_HEADER:
            raise TraceError(f"{path}: line 1: expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise TraceError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            nid = row[0].strip()
            try:
                t, x, y = (float(v) for v in row[1:])
            except ValueError:
                raise TraceError(f"{path}: line {lineno}: non-numeric field") from None
            if not all(np.isfinite((t, x, y))):
                raise TraceError(f"{path}: line {lineno}: non-finite value")
            samples = per_node.get(nid)
            if samples is None:
                samples = per_node[nid] = []
                order.append(nid)
            if samples and t <= samples[-1][0]:
                raise TraceError(
                    f"{path}: line {lineno}: timestamp {t} not after {samples[-1][0]} for node {nid}"
                )
            samples.append((t, x, y))
    if not order:
        return MobilityTrace(np.empty(0), np.empty((0, 0)), np.empty((0, 0)), [], dt)
    t0 = min(s[0][0] for s in per_node.values())
    t1 = max(s[-1][0] for s in per_node.values())
    n_steps = int(np.floor((t1 - t0) / dt + 1e-9)) + 1
    grid = t0 + dt * np.arange(n_steps)
    x = np.empty((n_steps, len(order)))
    y = np.empty((n_steps, len(order)))
    for j, nid in enumerate(order):
        x[:, j], y[:, j] = _resample(per_node[nid], grid)
    try:
        ids = [int(n) for n in order]
    except ValueError:
        ids = order
    return MobilityTrace(grid, x, y, ids, dt)


def synth_random_waypoint(n_nodes: int, area_m, speed_range, pause_range, duration: float,
                          seed: int, dt: float = 30.0) -> MobilityTrace:
    """Random-waypoint walkers in a ``width x height`` rectangle.

    Each node starts at a uniform point, walks to a uniform waypoint at a
    uniform speed, pauses for a uniform time, and repeats.
    """
    if np.isscalar(area_m):
        width = height = float(area_m)
    else:
        width, height = (float(v) for v in area_m)
    vmin, vmax = (float(v) for v in speed_range)
    pmin, pmax = (float(v) for v in pause_range)
    if n_nodes < 0 or width <= 0 or height <= 0 or duration < 0 or dt <= 0:
        raise TraceError("random waypoint parameters must be positive")
    if not 0 < vmin <= vmax or not 0 <= pmin <= pmax:
        raise TraceError("invalid speed or pause range")
    n_steps = int(np.floor(duration / dt + 1e-9)) + 1
    grid = dt * np.arange(n_steps)
    x = np.empty((n_steps, n_nodes))
    y = np.empty((n_steps, n_nodes))
    rng = np.random.default_rng(seed)
    for j in range(n_nodes):
        bt = [0.0]
        bx = [rng.uniform(0, width)]
        by = [rng.uniform(0, height)]
        while bt[-1] <= duration:
            tx, ty = rng.uniform(0, width), rng.uniform(0, height)
            speed = rng.uniform(vmin, vmax)
            dist = float(np.hypot(tx - bx[-1], ty - by[-1]))
            bt.append(bt[-1] + dist / speed)
            bx.append(tx)
            by.append(ty)
            pause = rng.uniform(pmin, pmax)
            if pause > 0:
                bt.append(bt[-1] + pause)
                bx.append(tx)
                by.append(ty)
        x[:, j] = np.interp(grid, bt, bx)
        y[:, j] = np.interp(grid, bt, by)
    return MobilityTrace(grid, x, y, list(range(n_nodes)), dt)


def static_trace(positions, duration: float, dt: float = 30.0) -> MobilityTrace:
    """Nodes that never move; handy for constructed test worlds."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    n_steps = int(np.floor(duration / dt + 1e-9)) + 1
    x = np.tile(pos[:, 0], (n_steps, 1))
    y = np.tile(pos[:, 1], (n_steps, 1))
    return MobilityTrace(dt * np.arange(n_steps), x, y, list(range(len(pos))), dt)


def write_rows(path, rows) -> None:
    """Write raw ``(node_id, t, x, y)`` rows with the normalized header."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        w.writerows(rows)
