"""Trust score, sigmoid priority multiplier, noise and decay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DAY = 86400.0


class TrustContractError(ValueError):
    pass


@dataclass(frozen=True)
class TrustParams:
    epsilon: float = 0.001
    rho: float = 13.0
    tau: float = 0.3
    mu: float = 0.0
    sigma2: float = 0.0
    decay_half_life: float = 7 * DAY

    def __post_init__(self):
        if not 0.0 < self.epsilon < self.tau < 1.0:
            raise ValueError("need 0 < epsilon < tau < 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.decay_half_life <= 0:
            raise ValueError("decay_half_life must be positive")

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)


def trust_score(shared: int, own_submitted: int, params: TrustParams) -> float:
    """Fraction of our submitted friends that the peer also has, floored at epsilon."""
    if shared < 0 or own_submitted < 0:
        raise TrustContractError("counts must be nonnegative")
    if shared > own_submitted:
        raise TrustContractError(f"shared ({shared}) exceeds own submitted ({own_submitted})")
    if own_submitted == 0:
        return params.epsilon
    return max(shared / own_submitted, params.epsilon)


def sigmoid_multiplier(t: float, params: TrustParams) -> float:
    z = params.rho * (t - params.tau)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def truncate01(x):
    return min(1.0, max(0.0, x))


def _normal(rng, params, size=None):
    if params.sigma2 == 0.0:
        return params.mu if size is None else np.full(size, params.mu)
    return rng.normal(params.mu, params.sigma, size)


def update_priority(p_o: float, t: float, params: TrustParams, rng=None) -> float:
    """Received priority: ``Tr01(multiplier(t) * p_o + z)``, ``z ~ N(mu, sigma2)``.

    ``rng`` is a numpy Generator; it is not consulted when sigma2 is 0.
    """
    z = _normal(rng, params)
    return truncate01(sigmoid_multiplier(t, params) * p_o + z)


def update_priorities(p_o: np.ndarray, t: float, params: TrustParams, rng=None) -> np.ndarray:
    """Vectorised ``update_priority``; draws one noise sample per entry, in order."""
    p_o = np.asarray(p_o, dtype=np.float64)
    z = _normal(rng, params, size=p_o.shape)
    return np.clip(sigmoid_multiplier(t, params) * p_o + z, 0.0, 1.0)


def decay_priority(p: float, elapsed: float, params: TrustParams) -> float:
    if elapsed < 0:
        raise ValueError("elapsed must be nonnegative")
    if elapsed == 0:
        return p
    return p * 2.0 ** (-elapsed / params.decay_half_life)
