"""Anonymity-set, graph-leakage and path-loss estimators."""

from .anonymity import (
    AnonymityModel,
    HopDistribution,
    MultiplierDist,
    anonymity_set_curve,
    confidence_hop_sets,
    contacts_from_trace,
    empirical_hop_pmf,
    hop_matrix,
    hop_posterior,
    priority_likelihood,
    saturation_curve,
)
from .leakage import (
    LeakageModel,
    corruption_order,
    dynamic_leakage_closed_form,
    dynamic_leakage_simulate,
    leakage_ode_solution,
    leakage_ratio,
    simulated_ratios,
    static_leakage,
    static_leakage_curve,
)
from .pathloss import SPEED_OF_LIGHT, PathLossParams, jam_radius, received_power

__all__ = [
    "AnonymityModel",
    "HopDistribution",
    "LeakageModel",
    "MultiplierDist",
    "PathLossParams",
    "SPEED_OF_LIGHT",
    "anonymity_set_curve",
    "confidence_hop_sets",
    "contacts_from_trace",
    "corruption_order",
    "dynamic_leakage_closed_form",
    "dynamic_leakage_simulate",
    "empirical_hop_pmf",
    "hop_matrix",
    "hop_posterior",
    "jam_radius",
    "leakage_ode_solution",
    "leakage_ratio",
    "priority_likelihood",
    "received_power",
    "saturation_curve",
    "simulated_ratios",
    "static_leakage",
    "static_leakage_curve",
]
