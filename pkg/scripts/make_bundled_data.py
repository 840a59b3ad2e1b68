"""Regenerate the synthetic trace shipped in src/rangzen/data/."""

from pathlib import Path

import numpy as np

from rangzen.sim import synth_random_waypoint, write_rows

OUT = Path(__file__).resolve().parents[1] / "src" / "rangzen" / "data"


def main():
    tr = synth_random_waypoint(60, 2000.0, (0.5, 1.5), (0.0, 120.0), 12 * 3600.0, seed=3, dt=60.0)
    rows = []
    for j in range(tr.n_nodes):
        for s in range(tr.n_steps):
            rows.append((j, int(tr.times[s]), f"{tr.x[s, j]:.2f}", f"{tr.y[s, j]:.2f}"))
    write_rows(OUT / "rwp60_trace.csv", rows)


if __name__ == "__main__":
    np.seterr(all="raise")
    main()
