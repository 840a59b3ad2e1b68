"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (collected and printed in the terminal
summary by conftest.py, or directly when run as a script) and then asserts.
"""

import math
import random
import time
from dataclasses import replace

import numpy as np
import pytest

from rangzen import analytics, cli, psi
from rangzen.config import bundled_config, load_config
from rangzen.exchange import ExchangeOutcome, FaultyStream, encode_messages_payload
from rangzen.sim import AdversaryConfig, build_world, gen_social_graph, run_epidemic_baseline, run_sim
from rangzen.sim.graph import SocialGraph
from rangzen.store import MessageStore
from rangzen.trust import TrustParams, sigmoid_multiplier

import oracles
from exchange_helpers import run_pair

RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
    RESULTS[n] = line
    print(line)


# -- 1: PSI cardinality vs brute force ---------------------------------------------

def test_criterion_01_psi_oracle():
    rng = random.Random(20240501)
    t0 = time.monotonic()
    bad = 0
    for _ in range(1000):
        na, nb = rng.randint(0, 30), rng.randint(0, 30)
        universe = [rng.randbytes(32) for _ in range(60)]
        a = rng.sample(universe, na)
        b = rng.sample(universe, nb)
        if psi.psi_cardinality(a, b, rng=rng) != oracles.intersection_size(a, b):
            bad += 1
    dt = time.monotonic() - t0
    ok = bad == 0 and dt < 120
    report(1, ok, f"1000 trials, {bad} mismatches, {dt:.1f} s")
    assert ok


# -- 2: sigmoid point values ---------------------------------------------------------

def test_criterion_02_sigmoid_points():
    p = TrustParams()
    at_tau = sigmoid_multiplier(0.3, p)
    at_one = sigmoid_multiplier(1.0, p)
    lim = 1.0 / (1.0 + math.exp(13 * 0.3))  # t = 0, evaluated without the epsilon floor
    checks = [
        abs(at_tau - 0.5) <= 1e-12,
        abs(at_one - 0.999889) <= 1e-6,
        abs(lim - 0.019840) <= 1e-6,
        abs(at_one - oracles.sigmoid(1.0)) <= 1e-15,
        abs(lim - oracles.sigmoid(0.0)) <= 1e-15,
    ]
    ok = all(checks)
    report(2, ok, f"s(tau)={at_tau:.15f} s(1)={at_one:.9f} s(0)={lim:.9f}")
    assert ok


# -- 3: jam radius -------------------------------------------------------------------

def test_criterion_03_jam_radius():
    params = analytics.PathLossParams(p_jammer=20.0, p_phone=0.251, link_distance=20.0)
    r = analytics.jam_radius(params)
    ref = oracles.jam_radius_root(20.0, 0.251, 20.0)
    ok = abs(r - 178.5) <= 0.1 and abs(r - ref) < 1e-6
    report(3, ok, f"radius {r:.4f} m (root finder {ref:.4f} m)")
    assert ok


# -- 4: asymptotic leakage ratio ---------------------------------------------------

TRIPLES = [(1.0, 0.5, 0.5), (2.0, 1.0, 0.25), (0.1, 0.2, 0.8)]


def test_criterion_04_leakage_ratio_limit():
    t0 = time.monotonic()
    parts, ok = [], True
    for k, (a, b, g) in enumerate(TRIPLES):
        model = analytics.LeakageModel(a, b, g, n_edges=2000)
        t = 100.0 / min(b, g)
        target = g / (g + b)
        closed = float(analytics.leakage_ratio(model, t))
        med = float(np.nanmedian(analytics.simulated_ratios(model, t, trials=40, seed=k + 1)))
        ok &= abs(closed - target) <= 1e-6 and abs(med - target) <= 0.05
        parts.append(f"({a},{b},{g}) target {target:.4f} closed {closed:.6f} median {med:.4f}")
    dt = time.monotonic() - t0
    ok &= dt < 300
    report(4, ok, "; ".join(parts) + f"; {dt:.1f} s")
    assert ok


# -- 5: closed form vs numerical integration ---------------------------------------

def test_criterion_05_closed_form_vs_ode():
    worst = 0.0
    t = np.linspace(0.0, 50.0, 201)
    for a in (0.1, 1.0, 2.0):
        for b in (0.2, 0.5, 1.0):
            for g in (0.25, 0.5, 0.8):
                model = analytics.LeakageModel(a, b, g, n_edges=2000)
                L, U = analytics.dynamic_leakage_closed_form(model, t)
                Ln, Un = analytics.leakage_ode_solution(model, t)
                for exact, num in ((L, Ln), (U, Un)):
                    pos = np.abs(exact) > 0
                    worst = max(worst, float(np.max(np.abs(num[pos] - exact[pos]) / np.abs(exact[pos]))))
                    assert np.all(num[~pos] == 0)
    ok = worst <= 1e-6
    report(5, ok, f"max relative error {worst:.2e} over 27 rate triples, t in [0, 50]")
    assert ok


# -- 6: static leakage -------------------------------------------------------------

def _random_graph(n, p, rng):
    g = SocialGraph(n)
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                g.add_edge(u, v)
    return g


def test_criterion_06_static_leakage():
    rng = random.Random(6)
    mismatches = 0
    for trial in range(20):
        n = rng.randint(2, 50)
        g = _random_graph(n, rng.uniform(0.05, 0.5), rng)
        for sel in ("uniform", "top_degree"):
            order = analytics.corruption_order(g, sel, seed=trial)
            eps = [k / n for k in range(n + 1)]
            for (e, d), k in zip(analytics.static_leakage_curve(g, eps, sel, seed=trial), range(n + 1)):
                if abs(d - oracles.static_leakage_recount(g.edges(), order[:k])) > 1e-12:
                    mismatches += 1
                if abs(analytics.static_leakage(g, e, sel, seed=trial) - d) > 1e-12:
                    mismatches += 1
    big = gen_social_graph(4000, 3, seed=0)
    grid = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]
    curve = analytics.static_leakage_curve(big, grid, "uniform", seed=0)
    d = dict(curve)
    monotone = all(x[1] <= y[1] for x, y in zip(curve, curve[1:]))
    ok = mismatches == 0 and monotone and d[0.0] == 0.0 and d[0.05] < d[0.1]
    info = " ".join(f"{e:g}:{v:.3f}" for e, v in curve)
    report(6, ok, f"{mismatches} oracle mismatches; BA(4000,3) curve {info}")
    assert ok


# -- 7: propagation on world400 ---------------------------------------------------

@pytest.fixture(scope="module")
def world400():
    cfg = load_config(bundled_config("world400.toml"))
    trace = cli.trace_from(cfg)
    graph = cli.graph_from(cfg, trace.n_nodes)
    return cfg, trace, graph


def test_criterion_07_propagation(world400):
    cfg, trace, graph = world400
    t0 = time.monotonic()
    dominated = True
    t50 = {c: [] for c in ("popular", "average", "unpopular")}
    reach = {"coalition": [], "popular": []}
    prio = {"coalition": [], "popular": []}
    seeds = range(int(cfg.get("n_seeds")))
    for seed in seeds:
        sc = cli.sim_config_from(cfg, seed)
        w = build_world(trace, graph, sc)
        m = run_sim(trace, graph, sc, world=w)
        e = run_epidemic_baseline(trace, sc, graph, world=w)
        dominated &= bool(np.all(m.reach <= e.reach))
        tm = m.time_to(0.5, censor=True)
        for c in t50:
            t50[c].append(m.class_mean(c, tm))
        fp = m.final_receipt_priority()
        for c in reach:
            reach[c].append(m.class_mean(c, m.reach[-1]))
            prio[c].append(m.class_mean(c, fp))
    mt = {c: float(np.mean(v)) / 3600 for c, v in t50.items()}
    ordering = mt["popular"] <= mt["average"] <= mt["unpopular"]
    mr = {c: float(np.mean(v)) for c, v in reach.items()}
    mp = {c: float(np.mean(v)) for c, v in prio.items()}
    coalition = mr["coalition"] <= mr["popular"] and mp["coalition"] < mp["popular"]
    dt = time.monotonic() - t0
    ok = dominated and ordering and coalition and dt < 1800
    report(7, ok, f"(a) dominance {dominated}; (b) t50 h popular {mt['popular']:.3f} average {mt['average']:.3f} "
                  f"unpopular {mt['unpopular']:.3f}; (c) reach coalition {mr['coalition']:.4f} popular "
                  f"{mr['popular']:.4f}, priority coalition {mp['coalition']:.5f} popular {mp['popular']:.5f}; "
                  f"{len(seeds)} seeds {dt:.0f} s")
    assert ok


# -- 8: jamming ----------------------------------------------------------------------

def test_criterion_08_jamming(world400):
    cfg, trace, graph = world400
    count = trace.n_nodes // 10
    radii = (0.0, 250.0, 500.0, 1000.0)
    monotone, identical = True, True
    finals = []
    for seed in range(5):
        base_cfg = cli.sim_config_from(cfg, seed)
        base_cfg = replace(base_cfg, adversary=AdversaryConfig())
        base = run_sim(trace, graph, base_cfg)
        row = []
        for r in radii:
            sc = replace(base_cfg, adversary=AdversaryConfig(kind="jammer", count=count, radius_m=r,
                                                            placement="mobile"))
            m = run_sim(trace, graph, sc)
            if r == 0.0:
                identical &= bool(np.array_equal(m.reach, base.reach) and np.array_equal(m.prio_sum, base.prio_sum))
            row.append(float(m.reach[-1].mean()))
        monotone &= all(a >= b for a, b in zip(row, row[1:]))
        finals.append(row)
    mean = np.mean(finals, axis=0)
    ok = monotone and identical
    report(8, ok, f"{count} mobile jammers, 5 seeds, mean final reach "
                  + " ".join(f"r={r:g}:{v:.4f}" for r, v in zip(radii, mean))
                  + f"; radius 0 bit-identical {identical}")
    assert ok


# -- 9: anonymity --------------------------------------------------------------------

def _anonymity_curve(name):
    cfg = load_config(bundled_config(name))
    a = cfg.section("anonymity")
    params = cli.trust_from(cfg)
    trace = cli.trace_from(cfg)
    model = analytics.AnonymityModel(params, cli._multipliers(cfg, params, trace), samples=int(a["samples"]),
                                     seed=int(a["seed"]))
    return analytics.anonymity_set_curve(model, trace, [float(c) for c in a["confidence_grid"]],
                                         encounter_range=float(a["encounter_range"]))


def test_criterion_09_anonymity():
    hi = _anonymity_curve("anonymity_mu03.toml")
    lo = _anonymity_curve("anonymity_mu0.toml")
    dominates = all(a >= b for (_, a), (_, b) in zip(hi, lo))
    mono = all(x[1] <= y[1] for c in (hi, lo) for x, y in zip(c, c[1:]))
    p = TrustParams(mu=0.3, sigma2=0.1)
    lik = analytics.priority_likelihood(
        analytics.AnonymityModel(p, analytics.MultiplierDist.constant(1.0), samples=200_000, seed=9), 1)
    phi = oracles.normal_cdf(0.3 / math.sqrt(0.1))
    ok = dominates and mono and abs(lik - phi) <= 0.01
    at90 = dict(hi)[0.9], dict(lo)[0.9]
    report(9, ok, f"dominance {dominates}, monotone {mono}, set at 0.9: mu=0.3 {at90[0]:.3f} mu=0 {at90[1]:.3f}; "
                  f"P(S=1|N=1) {lik:.4f} vs Phi {phi:.4f}")
    assert ok


# -- 10: exchange integrity ------------------------------------------------------

def _friends(rng, n_each, shared):
    common = [rng.randbytes(32) for _ in range(shared)]
    return (common + [rng.randbytes(32) for _ in range(n_each - shared)],
            common + [rng.randbytes(32) for _ in range(n_each - shared)])


def _store(rng, tag, n):
    s = MessageStore()
    for k in range(n):
        s.merge_received(f"{tag} secret note {k} {rng.random():.6f}", rng.uniform(0.05, 1.0), 0.0)
    return s


def test_criterion_10_exchange_integrity():
    rng = random.Random(10)
    params = TrustParams(sigma2=0.01)
    violations, leaks, commits, aborts, one_sided = 0, 0, 0, 0, 0
    for session in range(100):
        fa, fb = _friends(rng, rng.randint(0, 30), 0)
        shared = rng.randint(0, min(len(fa), 10))
        fb = fa[:shared] + fb[shared:]
        a, b = _store(rng, "a", rng.randint(0, 25)), _store(rng, "b", rng.randint(0, 25))
        snaps = a.snapshot(), b.snapshot()
        ref_a, ref_b = a.copy(), b.copy()
        _, ra_s, rb_s = run_pair(ref_a, ref_b, fa, fb, params, seed=session)
        full = ref_a.snapshot(), ref_b.snapshot()
        target = rng.choice(("wrap_a", "wrap_b"))
        total = len(ra_s.sent) if target == "wrap_a" else len(rb_s.sent)
        # offsets past the end leave the session untouched, so both outcomes occur
        off = rng.randrange(total + total // 4)
        kw = {"cut_at": off} if rng.random() < 0.5 else {"flip_at": off}
        (ra, rb), sa, sb = run_pair(a, b, fa, fb, params, seed=session, timeout=1.0,
                                    **{target: lambda s: FaultyStream(s, **kw)})
        done = [isinstance(r, ExchangeOutcome) for r in (ra, rb)]
        for store, snap, fin, ok_side in ((a, snaps[0], full[0], done[0]), (b, snaps[1], full[1], done[1])):
            if store.snapshot() != (fin if ok_side else snap):
                violations += 1
        commits += all(done)
        aborts += not any(done)
        one_sided += done[0] != done[1]
        wire = bytes(sa.sent) + bytes(sb.sent) + bytes(ra_s.sent) + bytes(rb_s.sent)
        for m in list(a.entries.values()) + list(b.entries.values()):
            leaks += m.body.encode() in wire
        leaks += sum(f in wire for f in fa + fb)
    ok = violations == 0 and leaks == 0
    report(10, ok, f"100 sessions: {commits} committed, {aborts} aborted, {one_sided} one-sided; "
                   f"{violations} partial stores; {leaks} plaintext hits")
    assert ok


# -- 11: payload size ----------------------------------------------------------------

def test_criterion_11_payload_size():
    rng = random.Random(11)
    fa, fb = _friends(rng, 30, 9)
    a, b = MessageStore(), MessageStore()
    for k in range(100):
        a.merge_received(f"{k:03d}a".ljust(140, "x"), rng.uniform(0.1, 1.0), 0.0)
        b.merge_received(f"{k:03d}b".ljust(140, "y"), rng.uniform(0.1, 1.0), 0.0)
    msgs = len(encode_messages_payload([(m.body, 0.5) for m in a.entries.values()]))
    (ra, rb), sa, sb = run_pair(a, b, fa, fb, TrustParams())
    assert isinstance(ra, ExchangeOutcome) and rb.messages_committed == 100
    up, down = len(sa.sent), len(sb.sent)
    _, req = psi.psi_initiate(fa)
    req_bytes = len(psi.encode_request(req))
    resp, _ = psi.psi_respond(fb, req)
    resp_bytes = len(psi.encode_response(resp))
    limit = 47_000
    ok = max(up, down) <= limit
    report(11, ok, f"initiator sent {up} B, responder sent {down} B (messages payload {msgs} B, "
                   f"PSI request {req_bytes} B, response {resp_bytes} B) limit {limit} B")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
