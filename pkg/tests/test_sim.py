import hashlib
import random
import threading

import numpy as np
import pytest

from rangzen import psi
from rangzen.exchange import EncounterBudget, establish_channel, memory_duplex, run_exchange
from rangzen.sim import (
    AdversaryConfig,
    SimConfig,
    SimConfigError,
    SocialGraph,
    TraceError,
    build_world,
    coalition_setup,
    encounter_schedule,
    gen_social_graph,
    load_trace,
    place_jammers,
    run_epidemic_baseline,
    run_sim,
    static_trace,
    synth_random_waypoint,
    write_reach_csv,
)
from rangzen.sim.adversary import anneal_jammers, blocked_count, degree_classes, step_events
from rangzen.sim.engine import _message_bodies
from rangzen.sim.graph import GraphError
from rangzen.sim.trace import write_rows
from rangzen.store import MessageStore
from rangzen.trust import TrustParams

import oracles

NOISELESS = TrustParams()


# -- traces ------------------------------------------------------------------------

def test_load_uniform_trace_is_identity(tmp_path):
    rows = [(n, t, 10.0 * n + t, 2.0 * t) for n in (0, 1) for t in (0, 30, 60)]
    write_rows(tmp_path / "t.csv", rows)
    tr = load_trace(tmp_path / "t.csv", dt=30)
    assert tr.n_nodes == 2 and tr.n_steps == 3
    assert np.array_equal(tr.x[:, 1], [10.0, 40.0, 70.0])


def test_load_interpolates_midpoint(tmp_path):
    write_rows(tmp_path / "t.csv", [(0, 0, 0.0, 0.0), (0, 60, 10.0, -4.0)])
    tr = load_trace(tmp_path / "t.csv", dt=30)
    assert (tr.x[1, 0], tr.y[1, 0]) == (5.0, -2.0)


def test_load_rejects_decreasing_time(tmp_path):
    write_rows(tmp_path / "t.csv", [(0, 0, 0, 0), (0, 60, 1, 1), (0, 30, 2, 2)])
    with pytest.raises(TraceError, match="line 4"):
        load_trace(tmp_path / "t.csv")


def test_load_rejects_bad_header(tmp_path):
    (tmp_path / "t.csv").write_text("a,b,c,d\n0,0,0,0\n")
    with pytest.raises(TraceError, match="line 1"):
        load_trace(tmp_path / "t.csv")


def test_trace_save_roundtrip(tmp_path):
    tr = synth_random_waypoint(4, 100, [1, 2], [0, 10], 600, seed=1)
    tr.save(tmp_path / "t.csv")
    back = load_trace(tmp_path / "t.csv", dt=30)
    assert np.allclose(back.x, tr.x) and np.allclose(back.y, tr.y)


def test_random_waypoint_deterministic_and_bounded():
    a = synth_random_waypoint(10, 500, [0.5, 1.5], [0, 60], 3600, seed=4)
    b = synth_random_waypoint(10, 500, [0.5, 1.5], [0, 60], 3600, seed=4)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert a.x.min() >= 0 and a.x.max() <= 500 and a.y.min() >= 0 and a.y.max() <= 500


def test_random_waypoint_kinematics():
    tr = synth_random_waypoint(5, 300, [1, 1], [0, 30], 1800, seed=2, dt=30)
    steps = np.hypot(np.diff(tr.x, axis=0), np.diff(tr.y, axis=0))
    assert steps.max() <= 30 + 1e-9


def test_random_waypoint_empty():
    tr = synth_random_waypoint(0, 100, [1, 1], [0, 0], 600, seed=0)
    assert tr.n_nodes == 0


# -- graphs ------------------------------------------------------------------------

def test_ba_tree():
    g = gen_social_graph(5, 1, seed=0)
    assert g.n_edges() == 4


def test_ba_edge_count_and_determinism():
    g = gen_social_graph(1000, 3, seed=11)
    assert g.n_edges() == oracles.ba_edge_count(1000, 3) == 2994
    assert g.edges() == gen_social_graph(1000, 3, seed=11).edges()
    deg = g.degrees()
    assert deg.min() >= 3 and deg.max() > 8 * deg.mean()


def test_graph_file_roundtrip(tmp_path):
    g = gen_social_graph(30, 2, seed=3)
    g.save(tmp_path / "g.csv")
    h = SocialGraph.load(tmp_path / "g.csv")
    assert h.edges() == g.edges() and h.model == g.model and h.n == 30


def test_graph_errors(tmp_path):
    (tmp_path / "g.csv").write_text("1,1\n")
    with pytest.raises(GraphError):
        SocialGraph.load(tmp_path / "g.csv")
    with pytest.raises(GraphError):
        gen_social_graph(3, 3, seed=0)


# -- two-node worlds ---------------------------------------------------------------

def two_node(distance, prob=1.0, steps=5):
    tr = static_trace([(0, 0), (distance, 0)], duration=30 * steps)
    g = SocialGraph(2)
    g.add_edge(0, 1)
    cfg = SimConfig(encounter_prob=prob, horizon=30 * steps)
    return tr, g, cfg


def test_two_nodes_in_range_cross_in_one_step():
    tr, g, cfg = two_node(5)
    m = run_sim(tr, g, cfg)
    assert np.array_equal(m.reach[0], [0.5, 0.5])
    assert np.array_equal(m.reach[1], [1.0, 1.0])
    e = run_epidemic_baseline(tr, cfg, g)
    assert np.array_equal(e.reach, m.reach)


def test_two_nodes_out_of_range_never_meet():
    tr, g, cfg = two_node(50)
    m = run_sim(tr, g, cfg)
    assert np.all(m.reach == 0.5)
    assert np.all(run_epidemic_baseline(tr, cfg, g).reach == 0.5)
    assert np.all(np.isinf(m.t90))


def test_misaligned_inputs():
    tr, _, cfg = two_node(5)
    with pytest.raises(SimConfigError):
        run_sim(tr, SocialGraph(3), cfg)


def test_config_validation():
    with pytest.raises(SimConfigError):
        SimConfig(encounter_prob=0)
    with pytest.raises(SimConfigError):
        SimConfig(encounter_range=0)
    with pytest.raises(SimConfigError):
        AdversaryConfig(kind="martians")


# -- shared fixtures ---------------------------------------------------------------

@pytest.fixture(scope="module")
def small_world():
    tr = synth_random_waypoint(40, 250, [0.5, 1.5], [0, 120], 4 * 3600, seed=5)
    g = gen_social_graph(40, 2, seed=5)
    return tr, g


def test_determinism(small_world):
    tr, g = small_world
    cfg = SimConfig(trust_params=TrustParams(sigma2=0.01), horizon=4 * 3600, drop_threshold=0.05, seed=3)
    a, b = run_sim(tr, g, cfg), run_sim(tr, g, cfg)
    assert np.array_equal(a.reach, b.reach) and np.array_equal(a.prio_sum, b.prio_sum)
    c = run_sim(tr, g, cfg.with_seed(4))
    assert not np.array_equal(a.prio_sum, c.prio_sum)


@pytest.mark.parametrize("seed", range(5))
def test_epidemic_dominance(small_world, seed):
    tr, g = small_world
    cfg = SimConfig(trust_params=TrustParams(sigma2=0.01), horizon=4 * 3600, drop_threshold=0.05,
                    store_capacity=10, max_messages_per_exchange=5, seed=seed)
    m, e = run_sim(tr, g, cfg), run_epidemic_baseline(tr, cfg, g)
    assert np.all(m.reach <= e.reach)
    assert np.all(np.diff(m.reach, axis=0) >= 0)
    assert m.encounters == e.encounters


def test_initial_reach_is_author_only(small_world):
    tr, g = small_world
    m = run_sim(tr, g, SimConfig(horizon=3600))
    assert np.allclose(m.reach[0], 1 / 40)


def test_metrics_csv(small_world, tmp_path):
    tr, g = small_world
    m = run_sim(tr, g, SimConfig(horizon=3600))
    write_reach_csv(m, tmp_path / "r.csv", every=10)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "message,t_seconds,reach_fraction,mean_priority"
    assert sum(1 for ln in lines if ",t90," in ln) == 40


# -- fast path against the real protocol ------------------------------------------

def _real_exchange(store_i, store_j, fi, fj, now, budget):
    sa, sb = memory_duplex(timeout=5)
    out = [None, None]

    def side(k, stream, role, store, friends):
        session = establish_channel(stream, role)
        out[k] = run_exchange(session, friends, store, NOISELESS, budget, rng=np.random.default_rng(k), now=now,
                              psi_rng=random.Random(k))

    ts = [threading.Thread(target=side, args=(0, sa, "initiator", store_i, fi)),
          threading.Thread(target=side, args=(1, sb, "responder", store_j, fj))]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    return out


@pytest.mark.parametrize("seed,capacity,budget,drop", [(1, 6, 4, 0.05), (2, 4, 2, 0.0), (3, 100, 500, 0.3)])
def test_fast_path_matches_real_exchange(seed, capacity, budget, drop):
    """Replays the simulator's encounters through real sessions and stores."""
    n = 10
    tr = synth_random_waypoint(n, 60, [0.5, 1.5], [0, 60], 1200, seed=8 + seed)
    g = gen_social_graph(n, 2, seed=8 + seed)
    cfg = SimConfig(encounter_prob=0.3, horizon=1200, store_capacity=capacity, max_messages_per_exchange=budget,
                    drop_threshold=drop, seed=seed)
    world = build_world(tr, g, cfg)
    fast = run_sim(tr, g, cfg, world=world)

    budget = EncounterBudget(max_messages_per_exchange=cfg.max_messages_per_exchange)
    bodies = _message_bodies(world)
    stores = [MessageStore(cfg.store_capacity, NOISELESS, cfg.drop_threshold) for _ in range(n)]
    for k, who in enumerate(world.authors):
        for a in who:
            stores[a].author(bodies[k], float(tr.times[0]))
    digest = {b: hashlib.sha256(b.encode()).digest() for b in bodies}
    friends = [[b"node-%d" % v for v in sorted(g.adj[u])] for u in range(n)]
    ever = np.zeros((n, len(bodies)), dtype=bool)
    for k, who in enumerate(world.authors):
        ever[who, k] = True
    psum = np.zeros(len(bodies))
    last = np.full(n, -np.inf)
    reach = [ever.sum(axis=0) / n]
    n_exchanges = 0
    for s, now, pairs in encounter_schedule(tr, world, cfg):
        for i, j in pairs.tolist():
            if now - last[i] < 1 or now - last[j] < 1:
                continue
            last[i] = last[j] = now
            n_exchanges += 1
            oi, oj = _real_exchange(stores[i], stores[j], friends[i], friends[j], now, budget)
            assert oi.peer_cardinality == len(g.adj[i] & g.adj[j])
            for v in (i, j):
                for k, b in enumerate(bodies):
                    if not ever[v, k] and digest[b] in stores[v]:
                        ever[v, k] = True
                        psum[k] += stores[v].get(digest[b]).priority
        reach.append(ever.sum(axis=0) / n)
    assert n_exchanges == fast.exchanges and n_exchanges > 50
    assert np.array_equal(np.array(reach), fast.reach)
    assert np.allclose(psum, fast.prio_sum[-1], rtol=0, atol=1e-12)


def test_fast_path_trust_matches_psi():
    g = gen_social_graph(200, 3, seed=2)
    rng = np.random.default_rng(0)
    for _ in range(30):
        i, j = (int(v) for v in rng.choice(200, 2, replace=False))
        a = [b"%d" % v for v in g.adj[i]]
        b = [b"%d" % v for v in g.adj[j]]
        if len(a) > 30 or len(b) > 30:
            continue
        assert psi.psi_cardinality(a, b) == len(g.adj[i] & g.adj[j])


# -- adversaries -------------------------------------------------------------------

def test_coalition_size():
    g = gen_social_graph(400, 3, seed=0)
    assert len(coalition_setup(g, 0.015, seed=1).members) == 6
    assert coalition_setup(g, 0.0, seed=1).members == []
    with pytest.raises(ValueError):
        coalition_setup(g, 1.5, seed=1)


def test_coalition_is_marginal():
    g = gen_social_graph(400, 3, seed=0)
    co = coalition_setup(g, 0.015, seed=1)
    honest = [v for v in range(400) if v not in co.members]
    unpop, _ = degree_classes(co.graph, honest, 0.05, seed=2)
    for u in co.members:
        assert co.graph.degree(u) <= 3
    assert co.pool == frozenset(v for u in co.members for v in co.graph.adj[u])


def test_coalition_cardinality_below_friend_of_friend():
    g = gen_social_graph(400, 3, seed=0)
    co = coalition_setup(g, 0.015, seed=1)
    cg = co.graph
    mset = set(co.members)
    honest = [v for v in range(400) if v not in mset]
    rng = np.random.default_rng(9)
    adv, fof = [], []
    for _ in range(2000):
        h = int(rng.choice(honest))
        adv.append(len(co.pool & cg.adj[h]))
        friends = [f for f in cg.adj[h] if f not in mset]
        if not friends:
            continue
        f = int(rng.choice(friends))
        cand = [v for v in cg.adj[f] if v != h and v not in mset]
        if cand:
            v = int(rng.choice(cand))
            fof.append(len(cg.adj[h] & cg.adj[v]))
    assert np.median(adv) <= np.median(fof)


def test_jammers_count_zero():
    tr = synth_random_waypoint(5, 100, [1, 1], [0, 0], 600, seed=0)
    assert place_jammers(tr, 0, 100, "uniform", seed=0) == []
    g = gen_social_graph(5, 1, seed=0)
    base = run_sim(tr, g, SimConfig(horizon=600))
    jam = run_sim(tr, g, SimConfig(horizon=600, adversary=AdversaryConfig(kind="jammer", count=0, radius_m=100)))
    assert np.array_equal(base.reach, jam.reach)


def test_uniform_jammers_reproducible():
    tr = synth_random_waypoint(5, 100, [1, 1], [0, 0], 600, seed=0)
    a = place_jammers(tr, 3, 10, "uniform", seed=4)
    assert a == place_jammers(tr, 3, 10, "uniform", seed=4)
    x0, y0, x1, y1 = tr.bounds()
    assert all(x0 <= x <= x1 and y0 <= y <= y1 for x, y in a)


def test_annealed_jammer_finds_plaza():
    # twelve walkers far apart except that pairs meet at a plaza around (700, 300)
    rng = np.random.default_rng(0)
    n, steps = 12, 60
    x = rng.uniform(0, 1000, (steps, n))
    y = rng.uniform(0, 1000, (steps, n))
    for s in range(steps):
        k = s % (n // 2)
        x[s, 2 * k: 2 * k + 2] = 700 + rng.normal(0, 3, 2)
        y[s, 2 * k: 2 * k + 2] = 300 + rng.normal(0, 3, 2)
    from rangzen.sim import MobilityTrace

    tr = MobilityTrace(30.0 * np.arange(steps), x, y, list(range(n)), 30.0)
    radius = 50.0
    events = step_events(tr, 20.0)
    (jx, jy), = anneal_jammers(events, 1, radius, tr.bounds(), seed=1, proposals=3000)
    best = max(blocked_count(events, [(gx, gy)], radius)
               for gx in np.linspace(0, 1000, 41) for gy in np.linspace(0, 1000, 41))
    got = blocked_count(events, [(jx, jy)], radius)
    assert np.hypot(jx - 700, jy - 300) < radius
    assert got >= 0.95 * best


def test_jam_radius_zero_is_unjammed(small_world):
    tr, g = small_world
    cfg = SimConfig(horizon=3 * 3600, seed=2)
    base = run_sim(tr, g, cfg)
    jam0 = run_sim(tr, g, SimConfig(horizon=3 * 3600, seed=2,
                                    adversary=AdversaryConfig(kind="jammer", count=4, radius_m=0.0)))
    assert np.array_equal(base.reach, jam0.reach) and np.array_equal(base.prio_sum, jam0.prio_sum)


def test_jamming_monotone_small(small_world):
    tr, g = small_world
    finals = []
    for r in (0, 20, 60, 150):
        cfg = SimConfig(horizon=4 * 3600, seed=1,
                        adversary=AdversaryConfig(kind="jammer", count=4, radius_m=r, placement="mobile"))
        finals.append(run_sim(tr, g, cfg).reach[-1].mean())
    assert all(a >= b for a, b in zip(finals, finals[1:]))


def test_coalition_run(small_world):
    tr, g = small_world
    cfg = SimConfig(horizon=4 * 3600, seed=1, adversary=AdversaryConfig(kind="coalition", fraction=0.05))
    w = build_world(tr, g, cfg)
    m = run_sim(tr, g, cfg, world=w)
    assert m.n_honest == 38 and m.n_messages == 39
    assert m.classes["coalition"] == [38]
    assert m.reach[0, 38] == 0.0
    assert np.all(m.reach <= run_epidemic_baseline(tr, cfg, g, world=w).reach)
