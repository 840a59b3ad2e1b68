"""Adversary construction: coalitions, jammer placement, popularity classes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _core
from .graph import SocialGraph
from .trace import MobilityTrace


@dataclass
class Coalition:
    members: list[int]
    pool: frozenset
    graph: SocialGraph


def degree_classes(graph: SocialGraph, nodes, fraction: float = 0.05, seed: int = 0):
    """Return ``(unpopular, popular)``: bottom and top ``fraction`` of ``nodes`` by degree.

    Ties at the class boundary are broken by a seeded shuffle.
    """
    nodes = list(nodes)
    k = max(1, math.ceil(fraction * len(nodes)))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(nodes))
    shuffled = [nodes[i] for i in perm]
    by_deg = sorted(shuffled, key=graph.degree)  # stable: shuffle breaks ties
    return by_deg[:k], by_deg[-k:][::-1]


def coalition_setup(graph: SocialGraph, fraction: float, seed: int, shared_friend_ids: bool = True):
    """Pick ``ceil(fraction*n)`` adversarial nodes and rewire them.

    Each member loses its edges and is re-attached to as many honest nodes
    as a 5th-percentile honest degree, chosen among the bottom 5% of honest
    nodes by degree: adversaries can only befriend marginal users. With
    ``shared_friend_ids`` the members pool their friend ids.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    n = graph.n
    k = math.ceil(fraction * n - 1e-9)
    g = graph.copy()
    if k == 0:
        return Coalition([], frozenset(), g)
    rng = np.random.default_rng(seed)
    members = sorted(int(v) for v in rng.choice(n, size=k, replace=False))
    mset = set(members)
    for u in members:
        for v in list(g.adj[u]):
            g.remove_edge(u, v)
    honest = [v for v in range(n) if v not in mset]
    if honest:
        degs = np.array([g.degree(v) for v in honest])
        per_member = max(1, int(np.percentile(degs, 5)))
        unpopular, _ = degree_classes(g, honest, 0.05, seed=seed + 1)
        targets = unpopular if len(unpopular) >= per_member else honest
        for u in members:
            picks = rng.choice(len(targets), size=min(per_member, len(targets)), replace=False)
            for i in picks:
                g.add_edge(u, targets[int(i)])
    pool = frozenset(v for u in members for v in g.adj[u]) if shared_friend_ids else frozenset()
    return Coalition(members, pool, g)


def step_events(trace: MobilityTrace, radius: float, max_events: int | None = None, seed: int = 0):
    """Endpoint coordinates of every in-range (step, pair) of the trace."""
    ax, ay, bx, by = [], [], [], []
    for s in range(trace.n_steps):
        xs, ys = trace.x[s], trace.y[s]
        present = np.flatnonzero(~np.isnan(xs))
        if len(present) < 2:
            continue
        pairs = _core.range_pairs(np.ascontiguousarray(xs[present]),
                                  np.ascontiguousarray(ys[present]), radius)
        if len(pairs):
            i, j = present[pairs[:, 0]], present[pairs[:, 1]]
            ax.append(xs[i])
            ay.append(ys[i])
            bx.append(xs[j])
            by.append(ys[j])
    if not ax:
        empty = np.empty(0)
        return empty, empty, empty, empty
    ev = [np.ascontiguousarray(np.concatenate(a)) for a in (ax, ay, bx, by)]
    if max_events is not None and len(ev[0]) > max_events:
        keep = np.sort(np.random.default_rng(seed).choice(len(ev[0]), max_events, replace=False))
        ev = [np.ascontiguousarray(a[keep]) for a in ev]
    return tuple(ev)


def blocked_count(events, jammers, radius) -> int:
    ax, ay, bx, by = events
    if len(ax) == 0 or len(jammers) == 0:
        return 0
    cover = np.zeros(len(ax), dtype=np.int32)
    for jx, jy in jammers:
        cover += _core.cover_mask(ax, ay, bx, by, float(jx), float(jy), float(radius))
    return int(np.count_nonzero(cover))


def anneal_jammers(events, count, radius, bounds, seed, proposals=10_000, init_samples=100,
                   cool_every=100, cooling=0.95):
    """Stationary jammer positions maximising blocked encounter opportunities.

    Temperature starts at the std of the objective over random placements and
    is multiplied by ``cooling`` every ``cool_every`` proposals. A proposal
    moves one jammer by a Gaussian step scaled to the current temperature
    fraction, or (1 in 10) teleports it.
    """
    xmin, ymin, xmax, ymax = bounds
    w, h = max(xmax - xmin, 1e-9), max(ymax - ymin, 1e-9)
    rng = np.random.default_rng(seed)
    ax, ay, bx, by = events
    if count == 0:
        return []

    def rand_pos():
        return np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)])

    samples = [blocked_count(events, [rand_pos() for _ in range(count)], radius)
               for _ in range(init_samples)]
    t0 = float(np.std(samples)) or 1.0
    pos = [rand_pos() for _ in range(count)]
    masks = [_core.cover_mask(ax, ay, bx, by, p[0], p[1], radius).astype(np.int32) for p in pos]
    cover = np.sum(masks, axis=0) if len(ax) else np.zeros(0, dtype=np.int32)
    score = int(np.count_nonzero(cover))
    best, best_pos = score, [p.copy() for p in pos]
    temp = t0
    for it in range(proposals):
        if it and it % cool_every == 0:
            temp *= cooling
        k = int(rng.integers(count))
        if rng.random() < 0.1:
            cand = rand_pos()
        else:
            scale = 0.25 * max(temp / t0, 0.01)
            cand = pos[k] + rng.normal(0.0, 1.0, 2) * np.array([w, h]) * scale
            cand = np.clip(cand, [xmin, ymin], [xmax, ymax])
        new_mask = _core.cover_mask(ax, ay, bx, by, cand[0], cand[1], radius).astype(np.int32)
        new_cover = cover - masks[k] + new_mask
        new_score = int(np.count_nonzero(new_cover))
        delta = new_score - score
        if delta >= 0 or rng.random() < math.exp(delta / max(temp, 1e-12)):
            pos[k], masks[k], cover, score = cand, new_mask, new_cover, new_score
            if score > best:
                best, best_pos = score, [p.copy() for p in pos]
    return [(float(p[0]), float(p[1])) for p in best_pos]


def place_jammers(trace: MobilityTrace, count: int, radius: float, mode: str, seed: int,
                  encounter_range: float = 20.0, **anneal_kw):
    """Jammer placement.

    ``uniform``: positions uniform over the trace bounding box.
    ``annealed``: simulated-annealing positions (see ``anneal_jammers``).
    ``mobile``: ids of trace nodes the jammers travel with.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    if mode == "mobile":
        return sorted(int(v) for v in rng.choice(trace.n_nodes, size=count, replace=False))
    bounds = trace.bounds()
    if mode == "uniform":
        return [(float(rng.uniform(bounds[0], bounds[2])), float(rng.uniform(bounds[1], bounds[3])))
                for _ in range(count)]
    if mode == "annealed":
        max_events = anneal_kw.pop("max_events", 200_000)
        events = step_events(trace, encounter_range, max_events=max_events, seed=seed)
        return anneal_jammers(events, count, radius, bounds, seed, **anneal_kw)
    raise ValueError(f"unknown jammer placement {mode!r}")
