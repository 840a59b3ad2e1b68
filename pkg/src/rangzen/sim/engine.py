"""Step-driven simulator over a mobility trace and a social graph.

Every honest node authors one message at t=0; a coalition, when present,
shares one message of its own. At each step every in-range pair (sorted by
node ids) draws an encounter with probability ``encounter_prob`` from a
dedicated stream, so the encounter process is identical across protocol
variants, jamming radii and the epidemic baseline.

Exchanges use the fast path: trust from the true intersection of the
submitted friend sets, and array-backed stores with the same semantics as
``MessageStore`` (max-merge, lazy decay, lowest-first eviction, per-exchange
message budget). ``tests/test_sim.py`` checks it against the real exchange.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .. import _core
from ..identity import DEFAULT_PSI_CAP
from ..trust import TrustParams, sigmoid_multiplier, trust_score
from .adversary import coalition_setup, degree_classes, place_jammers
from .graph import SocialGraph
from .trace import MobilityTrace

HOUR = 3600.0


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AdversaryConfig:
    kind: str = "none"  # none | passive_unpopular | coalition | jammer
    fraction: float = 0.015
    shared_friend_ids: bool = True
    forward_honest: bool = False
    radius_m: float = 0.0
    count: int = 0
    placement: str = "mobile"

    def __post_init__(self):
        if self.kind not in ("none", "passive_unpopular", "coalition", "jammer"):
            raise SimConfigError(f"unknown adversary kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise SimConfigError("coalition fraction must be in [0, 1]")
        if self.radius_m < 0 or self.count < 0:
            raise SimConfigError("jammer radius and count must be nonnegative")
        if self.placement not in ("mobile", "uniform", "annealed"):
            raise SimConfigError(f"unknown jammer placement {self.placement!r}")


@dataclass(frozen=True)
class SimConfig:
    encounter_range: float = 20.0
    encounter_prob: float = 0.05
    trust_params: TrustParams = field(default_factory=TrustParams)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    seed: int = 0
    horizon: float = 48 * HOUR
    store_capacity: int = 10_000
    max_messages_per_exchange: int = 500
    min_encounter_interval: float = 1.0
    drop_threshold: float = 0.0
    psi_cap: int = DEFAULT_PSI_CAP
    class_fraction: float = 0.05

    def __post_init__(self):
        if self.encounter_range <= 0:
            raise SimConfigError("encounter_range must be positive")
        if not 0.0 < self.encounter_prob <= 1.0:
            raise SimConfigError("encounter_prob must be in (0, 1]")
        if self.horizon < 0:
            raise SimConfigError("horizon must be nonnegative")
        if self.store_capacity < 1 or self.max_messages_per_exchange < 1 or self.psi_cap < 1:
            raise SimConfigError("capacities must be positive")
        if self.min_encounter_interval < 0:
            raise SimConfigError("min_encounter_interval must be nonnegative")
        if not 0.0 <= self.drop_threshold <= 1.0:
            raise SimConfigError("drop_threshold must be in [0, 1]")
        if not 0.0 < self.class_fraction <= 0.5:
            raise SimConfigError("class_fraction must be in (0, 0.5]")

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)


@dataclass
class SimMetrics:
    """Per-message reach curves.

    ``reach[s, k]`` is the fraction of honest nodes that have received
    message ``k`` by ``times[s]``. ``prio_sum``/``prio_count`` accumulate the
    priority each honest node stored the message with on first receipt.
    """

    times: np.ndarray
    reach: np.ndarray
    prio_sum: np.ndarray
    prio_count: np.ndarray
    authors: list
    classes: dict
    n_honest: int
    encounters: int = 0
    exchanges: int = 0

    @property
    def n_messages(self) -> int:
        return self.reach.shape[1]

    def mean_priority(self) -> np.ndarray:
        """Mean receipt priority per step and message (NaN before any receipt)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.prio_count > 0, self.prio_sum / np.maximum(self.prio_count, 1), np.nan)

    def final_receipt_priority(self) -> np.ndarray:
        return self.mean_priority()[-1]

    def time_to(self, fraction: float, censor: bool = False) -> np.ndarray:
        """First time each message reaches ``fraction``; inf (or the horizon) if never."""
        hit = self.reach >= fraction - 1e-12
        first = np.argmax(hit, axis=0)
        out = self.times[first].astype(float)
        never = ~hit.any(axis=0)
        out[never] = self.times[-1] if censor else np.inf
        return out

    @property
    def t90(self) -> np.ndarray:
        return self.time_to(0.9)

    def class_mean(self, name: str, values) -> float:
        idx = self.classes.get(name, [])
        vals = np.asarray(values)[idx]
        return float(np.mean(vals)) if len(idx) else float("nan")


@dataclass
class World:
    """Everything both simulators share for one (trace, graph, config)."""

    graph: SocialGraph
    honest: np.ndarray
    coalition: list
    pool: frozenset
    authors: list
    classes: dict
    jammers: list
    jammer_mode: str


def _check_aligned(trace: MobilityTrace, graph: SocialGraph | None):
    if graph is not None and graph.n != trace.n_nodes:
        raise SimConfigError(f"trace has {trace.n_nodes} nodes but graph has {graph.n}")


def build_world(trace: MobilityTrace, graph: SocialGraph | None, config: SimConfig) -> World:
    _check_aligned(trace, graph)
    n = trace.n_nodes
    g = graph if graph is not None else SocialGraph(n)
    adv = config.adversary
    members: list[int] = []
    pool = frozenset()
    if adv.kind == "coalition":
        co = coalition_setup(g, adv.fraction, seed=config.seed + 7919, shared_friend_ids=adv.shared_friend_ids)
        g, members, pool = co.graph, co.members, co.pool
    mset = set(members)
    honest = np.array([v for v in range(n) if v not in mset], dtype=np.int64)
    authors = [[int(v)] for v in honest]
    classes = {"average": list(range(len(honest)))}
    if len(honest):
        unpop, pop = degree_classes(g, honest.tolist(), config.class_fraction, seed=config.seed + 104729)
        pos = {int(v): k for k, v in enumerate(honest)}
        classes["popular"] = [pos[v] for v in pop]
        classes["unpopular"] = [pos[v] for v in unpop]
    if members:
        classes["coalition"] = [len(authors)]
        authors.append(list(members))
    jammers: list = []
    if adv.kind == "jammer" and adv.count > 0:
        jammers = place_jammers(trace, adv.count, adv.radius_m, adv.placement, seed=config.seed + 15485863,
                                encounter_range=config.encounter_range)
    return World(g, honest, members, pool, authors, classes, jammers, adv.placement)


def _jammed(world: World, trace: MobilityTrace, step: int, radius: float) -> np.ndarray | None:
    if not world.jammers or radius <= 0:
        return None
    xs, ys = trace.x[step], trace.y[step]
    if world.jammer_mode == "mobile":
        hosts = np.asarray(world.jammers)
        jx, jy = xs[hosts], ys[hosts]
        keep = ~np.isnan(jx)
        jx, jy = jx[keep], jy[keep]
    else:
        jx = np.array([p[0] for p in world.jammers])
        jy = np.array([p[1] for p in world.jammers])
    if len(jx) == 0:
        return None
    d2 = (xs[:, None] - jx[None, :]) ** 2 + (ys[:, None] - jy[None, :]) ** 2
    with np.errstate(invalid="ignore"):
        return (d2 < radius * radius).any(axis=1)


def encounter_schedule(trace: MobilityTrace, world: World, config: SimConfig):
    """Yield ``(step, now, pairs)`` of encounters in deterministic order.

    Draws are made for every in-range pair before jamming is applied, so the
    draws do not depend on the jammer configuration.
    """
    rng = np.random.default_rng([config.seed, 1])
    radius = config.adversary.radius_m if config.adversary.kind == "jammer" else 0.0
    t0 = trace.times[0] if trace.n_steps else 0.0
    for s in range(1, trace.n_steps):
        now = float(trace.times[s])
        if now - t0 > config.horizon + 1e-9:
            break
        xs, ys = trace.x[s], trace.y[s]
        present = np.flatnonzero(~np.isnan(xs))
        if len(present) < 2:
            yield s, now, np.empty((0, 2), dtype=np.int64)
            continue
        local = _core.range_pairs(np.ascontiguousarray(xs[present]), np.ascontiguousarray(ys[present]),
                                  float(config.encounter_range))
        pairs = present[local] if len(local) else np.empty((0, 2), dtype=np.int64)
        draws = rng.random(len(pairs))
        pairs = pairs[draws < config.encounter_prob]
        jam = _jammed(world, trace, s, radius)
        if jam is not None and len(pairs):
            pairs = pairs[~(jam[pairs[:, 0]] | jam[pairs[:, 1]])]
        yield s, now, pairs


def _n_steps(trace: MobilityTrace, config: SimConfig) -> int:
    if trace.n_steps == 0:
        return 0
    t = trace.times - trace.times[0]
    return int(np.count_nonzero(t <= config.horizon + 1e-9))


def _message_bodies(world: World) -> list[str]:
    return [f"msg {k} from {'+'.join(map(str, a))}" for k, a in enumerate(world.authors)]


class ArrayStores:
    """One ``MessageStore`` per node, held as dense (node, message) arrays."""

    def __init__(self, n_nodes, bodies, config: SimConfig):
        m = len(bodies)
        self.params = config.trust_params
        self.capacity = config.store_capacity
        self.budget = config.max_messages_per_exchange
        self.floor = config.drop_threshold
        self.P = np.zeros((n_nodes, m))
        self.U = np.zeros((n_nodes, m))
        self.F = np.zeros((n_nodes, m))
        self.H = np.zeros((n_nodes, m), dtype=bool)
        ids = [hashlib.sha256(b.encode()).digest() for b in bodies]
        self._fcache: dict[float, float] = {}
        self.id_rank = np.argsort(np.argsort(np.array(ids, dtype=object))).astype(np.int64)

    def author(self, node, k, now):
        self.P[node, k] = 1.0
        self.U[node, k] = now
        if not self.H[node, k]:
            self.F[node, k] = now
            self.H[node, k] = True

    def _factors(self, elapsed):
        # scalar pow per distinct elapsed time, so results match the store
        # bit for bit (vectorised pow can differ in the last ulp)
        u, inv = np.unique(elapsed, return_inverse=True)
        hl = self.params.decay_half_life
        cache = self._fcache
        f = np.empty(len(u))
        for k, e in enumerate(u.tolist()):
            v = cache.get(e)
            if v is None:
                v = cache[e] = 2.0 ** (-e / hl) if e > 0 else 1.0
            f[k] = v
        return f[inv.reshape(-1)]

    def _decayed(self, node, idx, now):
        elapsed = now - self.U[node, idx]
        p = self.P[node, idx]
        if not len(idx):
            return p
        return p * self._factors(elapsed)

    def _order(self, node, idx, now):
        d = self._decayed(node, idx, now)
        o = np.lexsort((self.id_rank[idx], self.F[node, idx], -d))
        return idx[o], d[o]

    def outgoing(self, node, now, only=None):
        idx = np.flatnonzero(self.H[node])
        if only is not None:
            idx = idx[np.isin(idx, only)]
        if not len(idx):
            return idx, np.empty(0)
        idx, d = self._order(node, idx, now)
        return idx[: self.budget], d[: self.budget]

    def receive(self, node, idx, prios, now):
        """Merge a batch; returns the indices of messages newly inserted."""
        keep = prios >= self.floor
        idx, prios = idx[keep], prios[keep]
        held = self.H[node, idx]
        cur = self._decayed(node, idx, now)
        up = held & (prios > cur)
        ui = idx[up]
        self.P[node, ui] = prios[up]
        self.U[node, ui] = now
        new = idx[~held]
        self.P[node, new] = prios[~held]
        self.U[node, new] = now
        self.F[node, new] = now
        self.H[node, new] = True
        held_idx = np.flatnonzero(self.H[node])
        excess = len(held_idx) - self.capacity
        if excess > 0:
            d = self._decayed(node, held_idx, now)
            o = np.lexsort((self.id_rank[held_idx], self.F[node, held_idx], d))
            self.H[node, held_idx[o[:excess]]] = False
        return new[self.H[node, new]]

    def deliver(self, dst, t, idx, d, now, rng, mults=None):
        """Apply the trust update to a sender batch and merge it at ``dst``.

        Returns ``(idx, prios, inserted)``. Noise is drawn one value per
        entry in batch order, as ``update_priorities`` does.
        """
        params = self.params
        if mults is None:
            m = sigmoid_multiplier(t, params)
        else:
            m = mults.get(t)
            if m is None:
                m = mults[t] = sigmoid_multiplier(t, params)
        z = params.mu if params.sigma2 == 0.0 else rng.normal(params.mu, params.sigma, len(idx))
        prios = np.clip(m * d + z, 0.0, 1.0)
        return idx, prios, self.receive(dst, idx, prios, now)


def _psi_inputs(friends, cap, rng):
    if len(friends) <= cap:
        return friends
    return set(rng.choice(sorted(friends), size=cap, replace=False).tolist())


def run_sim(trace: MobilityTrace, graph: SocialGraph, config: SimConfig, world: World | None = None) -> SimMetrics:
    """Rangzen dissemination; see the module docstring."""
    _check_aligned(trace, graph)
    world = world or build_world(trace, graph, config)
    g = world.graph
    n = trace.n_nodes
    params = config.trust_params
    prng = np.random.default_rng([config.seed, 2])
    bodies = _message_bodies(world)
    n_msg = len(bodies)
    stores = ArrayStores(n, bodies, config)
    is_honest = np.zeros(n, dtype=bool)
    is_honest[world.honest] = True
    t0 = float(trace.times[0]) if trace.n_steps else 0.0
    for k, who in enumerate(world.authors):
        for a in who:
            stores.author(a, k, t0)
    coalition = set(world.coalition)
    forward_honest = config.adversary.forward_honest
    own = {a: np.array([k for k, who in enumerate(world.authors) if a in who]) for a in coalition}
    friends = [set(g.adj[v]) for v in range(n)]
    if world.pool:
        for a in coalition:
            friends[a] = set(world.pool)
    last_seen = np.full(n, -np.inf)
    mults: dict[float, float] = {}

    steps = max(_n_steps(trace, config), 1)
    n_h = max(len(world.honest), 1)
    ever = stores.H & is_honest[:, None]
    counts = ever.sum(axis=0).astype(np.int64)
    reach = np.zeros((steps, n_msg))
    psum_t = np.zeros((steps, n_msg))
    pcnt_t = np.zeros((steps, n_msg), dtype=np.int64)
    psum = np.zeros(n_msg)
    pcnt = np.zeros(n_msg, dtype=np.int64)
    reach[0] = counts / n_h
    encounters = exchanges = 0

    def batch(src, now):
        if src in coalition and not forward_honest:
            return stores.outgoing(src, now, own[src])
        return stores.outgoing(src, now)

    def deliver(dst, t, idx, d, now):
        if not len(idx) or (dst in coalition and not forward_honest):
            return
        idx, prios, new = stores.deliver(dst, t, idx, d, now, prng, mults)
        if is_honest[dst] and len(new):
            fresh = new[~ever[dst, new]]
            if len(fresh):
                ever[dst, fresh] = True
                counts[fresh] += 1
                sel = np.isin(idx, fresh)
                psum[idx[sel]] += prios[sel]
                pcnt[idx[sel]] += 1

    gap = config.min_encounter_interval
    for s, now, pairs in encounter_schedule(trace, world, config):
        if s >= steps:
            break
        for i, j in pairs.tolist():
            encounters += 1
            if now - last_seen[i] < gap or now - last_seen[j] < gap:
                continue
            last_seen[i] = last_seen[j] = now
            exchanges += 1
            si = _psi_inputs(friends[i], config.psi_cap, prng)
            sj = _psi_inputs(friends[j], config.psi_cap, prng)
            shared = len(si & sj)
            # both batches come from the pre-exchange stores; the responder
            # stages first, as on the wire
            out_i, out_j = batch(i, now), batch(j, now)
            deliver(j, trust_score(shared, len(sj), params), *out_i, now)
            deliver(i, trust_score(shared, len(si), params), *out_j, now)
        reach[s] = counts / n_h
        psum_t[s] = psum
        pcnt_t[s] = pcnt
    times = trace.times[:steps].astype(float) if trace.n_steps else np.zeros(1)
    return SimMetrics(times, reach, psum_t, pcnt_t, world.authors, world.classes, len(world.honest),
                      encounters, exchanges)


def run_epidemic_baseline(trace: MobilityTrace, config: SimConfig, graph: SocialGraph | None = None,
                          world: World | None = None) -> SimMetrics:
    """Flooding over the same encounter process: every encounter moves everything.

    Trust, budgets, rate limits and coalition behaviour do not apply; the
    message set and honest population match ``run_sim`` for the same inputs.
    """
    world = world or build_world(trace, graph, config)
    n = trace.n_nodes
    n_msg = len(world.authors)
    has = np.zeros((n, n_msg), dtype=bool)
    for k, who in enumerate(world.authors):
        has[who, k] = True
    honest = np.zeros(n, dtype=bool)
    honest[world.honest] = True
    steps = max(_n_steps(trace, config), 1)
    n_h = max(len(world.honest), 1)
    reach = np.zeros((steps, n_msg))
    reach[0] = has[honest].sum(axis=0) / n_h
    encounters = 0
    for s, _, pairs in encounter_schedule(trace, world, config):
        if s >= steps:
            break
        for i, j in pairs.tolist():
            encounters += 1
            u = has[i] | has[j]
            has[i] = u
            has[j] = u
        reach[s] = has[honest].sum(axis=0) / n_h
    times = trace.times[:steps].astype(float) if trace.n_steps else np.zeros(1)
    nan = np.full((steps, n_msg), np.nan)
    return SimMetrics(times, reach, nan, np.zeros((steps, n_msg), dtype=np.int64), world.authors,
                      world.classes, len(world.honest), encounters, encounters)
