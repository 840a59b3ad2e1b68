"""CSV output for simulation runs."""

from __future__ import annotations

import csv
import math

import numpy as np

from .engine import SimMetrics

REACH_HEADER = ["message", "t_seconds", "reach_fraction", "mean_priority"]
SUMMARY_HEADER = ["run", "seed", "message", "class", "t50_seconds", "t90_seconds", "final_reach",
                  "mean_receipt_priority"]


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and (math.isnan(x) or math.isinf(x))):
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(round(float(x), 10))
    return str(x)


def message_class(metrics: SimMetrics, k: int) -> str:
    for name in ("coalition", "popular", "unpopular"):
        if k in metrics.classes.get(name, ()):
            return name
    return "average"


def write_reach_csv(metrics: SimMetrics, path, every: int = 1) -> None:
    """Per-message curve, one row per recorded step, then a ``t90`` row."""
    mp = metrics.mean_priority()
    t90 = metrics.t90
    steps = list(range(0, len(metrics.times), max(1, every)))
    if steps[-1] != len(metrics.times) - 1:
        steps.append(len(metrics.times) - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REACH_HEADER)
        for k in range(metrics.n_messages):
            for s in steps:
                w.writerow([k, _fmt(float(metrics.times[s])), _fmt(float(metrics.reach[s, k])),
                            _fmt(float(mp[s, k]))])
            w.writerow([k, "t90", _fmt(float(t90[k])), ""])


def summary_rows(metrics: SimMetrics, run: str, seed: int):
    t50 = metrics.time_to(0.5)
    t90 = metrics.t90
    fp = metrics.final_receipt_priority()
    for k in range(metrics.n_messages):
        yield [run, seed, k, message_class(metrics, k), _fmt(float(t50[k])), _fmt(float(t90[k])),
               _fmt(float(metrics.reach[-1, k])), _fmt(float(fp[k]))]


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)


def class_t90_summary(metrics: SimMetrics) -> dict:
    """Mean t90 (hours, censored at the horizon) and share reaching 90%, per class."""
    t90 = metrics.time_to(0.9, censor=True)
    hit = np.isfinite(metrics.t90)
    out = {}
    for name, idx in metrics.classes.items():
        if idx:
            out[name] = (float(np.mean(t90[idx]) / 3600.0), float(np.mean(hit[idx])))
    return out
