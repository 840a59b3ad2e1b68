"""Trace-driven dissemination simulator."""

from .adversary import Coalition, coalition_setup, degree_classes, place_jammers
from .engine import (
    AdversaryConfig,
    ArrayStores,
    SimConfig,
    SimConfigError,
    SimMetrics,
    World,
    build_world,
    encounter_schedule,
    run_epidemic_baseline,
    run_sim,
)
from .metrics import class_t90_summary, summary_rows, write_reach_csv, write_summary_csv
from .graph import GraphError, SocialGraph, gen_social_graph
from .trace import MobilityTrace, TraceError, load_trace, static_trace, synth_random_waypoint, write_rows

__all__ = [
    "AdversaryConfig",
    "ArrayStores",
    "Coalition",
    "GraphError",
    "MobilityTrace",
    "SimConfig",
    "SimConfigError",
    "SimMetrics",
    "SocialGraph",
    "TraceError",
    "World",
    "build_world",
    "class_t90_summary",
    "summary_rows",
    "write_reach_csv",
    "write_summary_csv",
    "coalition_setup",
    "degree_classes",
    "encounter_schedule",
    "gen_social_graph",
    "load_trace",
    "place_jammers",
    "run_epidemic_baseline",
    "run_sim",
    "static_trace",
    "synth_random_waypoint",
    "write_rows",
]
