"""Command-line entry point: ``rangzen <command> ...``."""

from __future__ import annotations

import argparse
import csv
import socket
import sys
import time
from pathlib import Path

import numpy as np

from . import analytics
from .config import ConfigError, RunConfig, load_config
from .exchange import EncounterBudget, ExchangeAborted, establish_channel, run_exchange
from .exchange.channel import PROTOCOL_VERSION
from .identity import FriendStore, IdentityError, QrPayload, generate_identity, qr_payload, select_psi_inputs
from .psi import PsiError
from .sim import AdversaryConfig, SimConfig, gen_social_graph, load_trace, run_epidemic_baseline, run_sim
from .sim import SocialGraph, synth_random_waypoint
from .sim.engine import HOUR, build_world
from .sim.metrics import class_t90_summary, summary_rows, write_reach_csv, write_summary_csv
from .store import MessageStore, StoreError
from .trust import DAY, TrustParams


class CliError(Exception):
    pass


def _fail(msg: str) -> int:
    print(f"rangzen: error: {msg}", file=sys.stderr)
    return 1


# -- config -> objects ---------------------------------------------------------

def trust_from(cfg: RunConfig) -> TrustParams:
    t = cfg.section("trust")
    kw = {k: float(t[k]) for k in ("epsilon", "rho", "tau", "mu", "sigma2") if k in t}
    if "decay_half_life_days" in t:
        kw["decay_half_life"] = float(t["decay_half_life_days"]) * DAY
    return TrustParams(**kw)


def trace_from(cfg: RunConfig):
    t = cfg.section("trace")
    dt = float(t.get("dt", 30.0))
    if "path" in t:
        return load_trace(cfg.require_file(t["path"]), dt=dt)
    syn = t.get("synth")
    if syn is None:
        raise ConfigError("[trace] needs 'path' or a [trace.synth] table")
    return synth_random_waypoint(
        int(syn.get("n_nodes", 20)),
        syn.get("area_m", 1000.0),
        syn.get("speed_range", [0.5, 1.5]),
        syn.get("pause_range", [0.0, 300.0]),
        float(syn.get("duration_hours", 2.0)) * HOUR,
        seed=int(syn.get("seed", cfg.get("seed", 0))),
        dt=dt,
    )


def graph_from(cfg: RunConfig, n_nodes: int) -> SocialGraph:
    g = cfg.section("graph")
    if "path" in g:
        return SocialGraph.load(cfg.require_file(g["path"]))
    model = g.get("model", "barabasi_albert")
    if model != "barabasi_albert":
        raise ConfigError(f"unknown graph model {model!r}")
    return gen_social_graph(n_nodes, int(g.get("m", 3)), seed=int(g.get("seed", cfg.get("seed", 0))))


def sim_config_from(cfg: RunConfig, seed: int) -> SimConfig:
    s = cfg.section("sim")
    a = cfg.section("adversary")
    adv = AdversaryConfig(**{k: v for k, v in a.items()})
    kw = {k: s[k] for k in ("encounter_range", "encounter_prob", "store_capacity", "max_messages_per_exchange",
                             "min_encounter_interval", "drop_threshold", "psi_cap", "class_fraction") if k in s}
    if "horizon_hours" in s:
        kw["horizon"] = float(s["horizon_hours"]) * HOUR
    return SimConfig(trust_params=trust_from(cfg), adversary=adv, seed=seed, **kw)


def _prepare(args) -> RunConfig:
    cfg = load_config(args.config)
    for assignment in getattr(args, "set", None) or []:
        cfg.override(assignment)
    if getattr(args, "seed", None) is not None:
        cfg.override(f"seed={args.seed}")
    if getattr(args, "output_dir", None) is not None:
        cfg.tree["output_dir"] = str(args.output_dir)
    cfg.check_files()
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    # relative output directories are taken from the working directory
    out = Path(cfg.get("output_dir", "rangzen-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- identity ------------------------------------------------------------------

def cmd_identity(args) -> int:
    path = Path(args.identity)
    if args.action == "new":
        if path.exists() and not args.force:
            return _fail(f"{path} exists (use --force to overwrite)")
        FriendStore(generate_identity(), cap=args.cap).save(path)
        print(qr_payload(FriendStore.load(path).own_id).to_hex())
        return 0
    store = FriendStore.load(path, cap=args.cap)
    if args.action == "show":
        print(qr_payload(store.own_id).to_hex())
        return 0
    if args.action == "friends":
        for digest in store.digests():
            print(digest.hex())
        return 0
    # befriend
    payload = QrPayload.from_hex(args.payload)
    store.add_friend(payload, int(time.time()) if args.now is None else args.now)
    store.save(path)
    print(f"friends: {len(store)}")
    return 0


# -- messages ------------------------------------------------------------------

def _load_store(path, now, create=False) -> MessageStore:
    path = Path(path)
    if not path.exists():
        if create:
            return MessageStore()
        raise StoreError(f"message store not found: {path}")
    return MessageStore.load(path, now=now)


def cmd_messages(args) -> int:
    now = time.time() if args.now is None else args.now
    if args.action == "author":
        store = _load_store(args.store, now, create=True)
        store.author(args.text, now)
        store.save(args.store, now)
        print(f"messages: {len(store)}")
        return 0
    store = _load_store(args.store, now)
    for m in store.ordered_view(limit=args.limit, now=now):
        print(f"{m.priority_at(now, store.params):.4f}\t{m.body}")
    return 0


# -- exchange ------------------------------------------------------------------

def _parse_address(text: str):
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise CliError(f"address must be host:port, got {text!r}")
    return host, int(port)


def _exchange_over(sock, role, args) -> int:
    now = time.time() if args.now is None else args.now
    friends = FriendStore.load(args.identity)
    store = _load_store(args.store, now, create=True)
    sock.settimeout(args.timeout)
    session = establish_channel(sock, role, version=args.protocol_version)
    outcome = run_exchange(session, select_psi_inputs(friends), store, store.params,
                           EncounterBudget(), now=now)
    store.save(args.store, now)
    print(f"cardinality {outcome.peer_cardinality}")
    print(f"committed {outcome.messages_committed}")
    return 0


def cmd_exchange(args) -> int:
    host, port = _parse_address(args.address)
    if args.action == "listen":
        with socket.create_server((host, port)) as srv:
            srv.settimeout(args.timeout)
            if args.port_file:
                Path(args.port_file).write_text(str(srv.getsockname()[1]))
            conn, _ = srv.accept()
            with conn:
                return _exchange_over(conn, "responder", args)
    with socket.create_connection((host, port), timeout=args.timeout) as conn:
        return _exchange_over(conn, "initiator", args)


# -- sim -------------------------------------------------------------------------

def cmd_sim(args) -> int:
    cfg = _prepare(args)
    out = _outdir(cfg)
    trace = trace_from(cfg)
    graph = graph_from(cfg, trace.n_nodes)
    s = cfg.section("sim")
    every = int(s.get("record_every", 1))
    base_seed = int(cfg.get("seed", 0))
    rows = []
    for k in range(int(cfg.get("n_seeds", 1))):
        seed = base_seed + k
        sc = sim_config_from(cfg, seed)
        world = build_world(trace, graph, sc)
        m = run_sim(trace, graph, sc, world=world)
        write_reach_csv(m, out / f"reach_seed{seed}.csv", every)
        rows.extend(summary_rows(m, "rangzen", seed))
        line = "  ".join(f"{c}: t90 {h:.2f} h ({hit:.0%} reached)" for c, (h, hit) in
                         sorted(class_t90_summary(m).items()))
        print(f"seed {seed} rangzen  {line}")
        if s.get("epidemic_baseline", True):
            e = run_epidemic_baseline(trace, sc, graph, world=world)
            write_reach_csv(e, out / f"epidemic_seed{seed}.csv", every)
            rows.extend(summary_rows(e, "epidemic", seed))
            line = "  ".join(f"{c}: t90 {h:.2f} h ({hit:.0%} reached)" for c, (h, hit) in
                             sorted(class_t90_summary(e).items()))
            print(f"seed {seed} epidemic  {line}")
    write_summary_csv(rows, out / "summary.csv")
    print(f"wrote {out}")
    return 0


# -- analyze ---------------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _multipliers(cfg: RunConfig, params: TrustParams, trace):
    a = cfg.section("anonymity")
    kind = a.get("multiplier", "graph")
    if kind == "constant":
        return analytics.MultiplierDist.constant(float(a.get("multiplier_value", 1.0)))
    if kind == "exponential_mixture":
        return analytics.MultiplierDist.exponential_mixture(a["weights"], a["rates"], params)
    if kind == "graph":
        graph = graph_from(cfg, trace.n_nodes)
        return analytics.MultiplierDist.from_graph(graph, params, n_pairs=int(a.get("n_pairs", 20_000)),
                                                   seed=int(a.get("seed", cfg.get("seed", 0))))
    raise ConfigError(f"unknown multiplier distribution {kind!r}")


def analyze_anonymity(cfg: RunConfig, out: Path):
    a = cfg.section("anonymity")
    params = trust_from(cfg)
    trace = trace_from(cfg)
    model = analytics.AnonymityModel(params, _multipliers(cfg, params, trace),
                                     samples=int(a.get("samples", 20_000)),
                                     seed=int(a.get("seed", cfg.get("seed", 0))))
    grid = [float(c) for c in a.get("confidence_grid", np.round(np.linspace(0.05, 1.0, 20), 2).tolist())]
    curve, prior, _ = analytics.anonymity_set_curve(
        model, trace, grid, encounter_range=float(a.get("encounter_range", 20.0)),
        n_max=a.get("n_max"), max_hops=int(a.get("max_hops", 64)), return_prior=True)
    _write_csv(out / "anonymity.csv", ["confidence", "set_fraction"], [(repr(c), repr(f)) for c, f in curve])
    for c, f in curve:
        print(f"{c:.2f}\t{f:.4f}")
    print(f"unreachable pair mass {prior.unreachable:.4f}")


def analyze_leakage_static(cfg: RunConfig, out: Path):
    lk = cfg.section("leakage")
    g = cfg.section("graph")
    if "path" in g:
        graph = SocialGraph.load(cfg.require_file(g["path"]))
    else:
        n = int(cfg.section("trace").get("synth", {}).get("n_nodes", 4000))
        graph = graph_from(cfg, n)
    eps = [float(e) for e in lk.get("epsilons", [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0])]
    curve = analytics.static_leakage_curve(graph, eps, lk.get("selection", "uniform"), seed=int(cfg.get("seed", 0)))
    _write_csv(out / "leakage_static.csv", ["epsilon", "d_epsilon"], [(repr(e), repr(d)) for e, d in curve])
    for e, d in curve:
        print(f"{e:.3f}\t{d:.4f}")


def analyze_leakage_dynamic(cfg: RunConfig, out: Path):
    lk = cfg.section("leakage")
    model = analytics.LeakageModel(float(lk.get("alpha", 1.0)), float(lk.get("beta", 0.5)),
                                   float(lk.get("gamma", 0.5)), int(lk.get("n_edges", 2000)))
    horizon = float(lk.get("horizon", 100.0))
    traj = analytics.dynamic_leakage_simulate(model, horizon, seed=int(cfg.get("seed", 0)),
                                              n_records=int(lk.get("n_records", 201)))
    rows = []
    for t, L, U, X in traj:
        ratio = L / (L + U) if L + U > 0 else float("nan")
        rows.append((repr(float(t)), int(L), int(U), int(X), "" if np.isnan(ratio) else repr(float(ratio))))
    _write_csv(out / "leakage_dynamic.csv", ["t", "L", "U", "X", "ratio"], rows)
    closed = float(analytics.leakage_ratio(model, horizon))
    final = rows[-1][4]
    print(f"final simulated ratio {float(final):.4f}" if final else "final simulated ratio undefined")
    print(f"mean-field ratio {closed:.4f}  asymptote {model.asymptotic_ratio:.4f}")


def analyze_jam_radius(cfg: RunConfig, out: Path):
    p = cfg.section("pathloss")
    params = analytics.PathLossParams(**{k: float(v) for k, v in p.items()})
    r = analytics.jam_radius(params)
    _write_csv(out / "jam_radius.csv", ["p_jammer_w", "p_phone_w", "link_distance_m", "jam_radius_m"],
               [(params.p_jammer, params.p_phone, params.link_distance, repr(r))])
    print(f"{r:.2f}")


ANALYSES = {
    "anonymity": analyze_anonymity,
    "leakage-static": analyze_leakage_static,
    "leakage-dynamic": analyze_leakage_dynamic,
    "jam-radius": analyze_jam_radius,
}


def cmd_analyze(args) -> int:
    cfg = _prepare(args)
    ANALYSES[args.analysis](cfg, _outdir(cfg))
    return 0


# -- parser ------------------------------------------------------------------------

def _run_opts(p):
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--output-dir", help="override output_dir")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config value, e.g. --set sim.encounter_prob=0.1")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rangzen", description="Delay-tolerant broadcast mesh tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identity", help="create and manage an identity and friend list")
    p.add_argument("action", choices=["new", "show", "befriend", "friends"])
    p.add_argument("payload", nargs="?", help="friend QR payload hex (befriend)")
    p.add_argument("--identity", required=True, help="identity file")
    p.add_argument("--cap", type=int, default=40, help="friend capacity")
    p.add_argument("--force", action="store_true")
    p.add_argument("--now", type=int)
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("messages", help="author or list messages in a store")
    p.add_argument("action", choices=["author", "show"])
    p.add_argument("text", nargs="?")
    p.add_argument("--store", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--now", type=float)
    p.set_defaults(func=cmd_messages)

    p = sub.add_parser("exchange", help="run one exchange over TCP")
    p.add_argument("action", choices=["listen", "connect"])
    p.add_argument("address", help="host:port (port 0 picks a free port when listening)")
    p.add_argument("--identity", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--now", type=float)
    p.add_argument("--port-file", help="write the bound port here (listen)")
    p.add_argument("--protocol-version", type=int, default=PROTOCOL_VERSION, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_exchange)

    p = sub.add_parser("sim", help="run simulations from a config file")
    _run_opts(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("analyze", help="analytical estimators")
    p.add_argument("analysis", choices=sorted(ANALYSES))
    _run_opts(p)
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "identity" and args.action == "befriend" and not args.payload:
        return _fail("befriend needs a payload")
    if args.command == "messages" and args.action == "author" and not args.text:
        return _fail("author needs message text")
    try:
        return args.func(args)
    except (ConfigError, IdentityError, StoreError, PsiError, CliError, ExchangeAborted, OSError,
            ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
