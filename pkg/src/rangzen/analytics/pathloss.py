"""Free-space path loss and the jamming radius it implies."""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PathLossParams:
    p_jammer: float = 20.0  # W
    p_phone: float = 0.251  # W
    link_distance: float = 20.0  # m
    frequency: float = 5.4e9  # Hz
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("p_jammer", "p_phone", "link_distance", "frequency", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def received_power(p_t: float, d: float, f: float, c: float = SPEED_OF_LIGHT) -> float:
    """Friis with unit antenna gains."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return p_t * (c / (4.0 * math.pi * d * f)) ** 2


def jam_radius(params: PathLossParams) -> float:
    """Largest jammer-receiver distance at which the jammer is at least as
    strong at the receiver as a phone transmitting over ``link_distance``.

    Both powers fall off as ``1/d^2`` with the same constant, so the
    frequency drops out.
    """
    return params.link_distance * math.sqrt(params.p_jammer / params.p_phone)
