"""How much of the trust graph an adversary learns.

Static: corrupted nodes reveal every incident edge. Dynamic: a three-bin
model where possible edges move X->U (creation, rate alpha per absent edge),
U,L->X (deletion, beta per edge) and U->L (learning, gamma per unlearned
edge): dL/dt = gamma U - beta L, dU/dt = alpha X - (beta + gamma) U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _core


@dataclass(frozen=True)
class LeakageModel:
    alpha: float
    beta: float
    gamma: float
    n_edges: int = 2000

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("rates must be nonnegative")
        if self.n_edges < 0:
            raise ValueError("n_edges must be nonnegative")

    @property
    def asymptotic_ratio(self) -> float:
        total = self.gamma + self.beta
        return self.gamma / total if total > 0 else float("nan")


# -- static ------------------------------------------------------------------

def corruption_order(graph, selection: str = "uniform", seed: int = 0) -> list[int]:
    """Node order in which corruption proceeds; prefixes are nested sets."""
    if selection == "uniform":
        return [int(v) for v in np.random.default_rng(seed).permutation(graph.n)]
    if selection == "top_degree":
        deg = graph.degrees()
        return sorted(range(graph.n), key=lambda v: (-int(deg[v]), v))
    raise ValueError(f"unknown selection {selection!r}")


def n_corrupted(epsilon: float, n: int) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    return min(n, math.ceil(epsilon * n - 1e-9))


def static_leakage(graph, epsilon: float, selection: str = "uniform", seed: int = 0) -> float:
    """Fraction of edges with at least one endpoint among ``ceil(eps*n)`` corrupted nodes."""
    k = n_corrupted(epsilon, graph.n)
    total = graph.n_edges()
    if total == 0 or k == 0:
        return 0.0
    bad = set(corruption_order(graph, selection, seed)[:k])
    learned = sum(1 for u, v in graph.edges() if u in bad or v in bad)
    return learned / total


def static_leakage_curve(graph, epsilons, selection: str = "uniform", seed: int = 0):
    """``[(eps, d_eps)]`` over one nested corruption order."""
    order = corruption_order(graph, selection, seed)
    rank = np.empty(graph.n, dtype=np.int64)
    rank[order] = np.arange(graph.n)
    edges = np.array(graph.edges(), dtype=np.int64).reshape(-1, 2)
    total = len(edges)
    # an edge is learned once its earlier-corrupted endpoint falls
    first = np.sort(np.minimum(rank[edges[:, 0]], rank[edges[:, 1]])) if total else np.empty(0)
    out = []
    for eps in epsilons:
        k = n_corrupted(eps, graph.n)
        d = float(np.searchsorted(first, k, side="left")) / total if total else 0.0
        out.append((float(eps), d))
    return out


# -- dynamic: mean field -----------------------------------------------------

def _phi(x):
    """(1 - exp(-x)) / x, continuous at 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 1.0, -np.expm1(-safe) / safe)


def dynamic_leakage_closed_form(model: LeakageModel, t):
    """Exact ``(L(t), U(t))`` from L(0) = U(0) = 0.

    Written with ``(1 - e^-x)/x`` factors so that alpha = gamma (and
    alpha + beta = 0, beta + gamma = 0) are ordinary points instead of
    divisions by zero.
    """
    a, b, g, n = model.alpha, model.beta, model.gamma, float(model.n_edges)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    ab, bg = a + b, b + g
    total = a * n * t * _phi(ab * t)
    # (e^{-ab t} - e^{-bg t}) / (a - g) == -t e^{-bg t} phi((a - g) t)
    inner = t * _phi(bg * t) - t * np.exp(-bg * t) * _phi((a - g) * t)
    learned = a * g * n * inner / ab if ab > 0 else np.zeros_like(t)
    return learned, total - learned


def leakage_ratio(model: LeakageModel, t):
    L, U = dynamic_leakage_closed_form(model, t)
    s = L + U
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, L / np.where(s > 0, s, 1.0), np.nan)


def leakage_ode_solution(model: LeakageModel, t_eval, rtol: float = 1e-12, atol: float = 1e-14):
    """Numerical integration of the same linear system (reference check)."""
    from scipy.integrate import solve_ivp

    a, b, g, n = model.alpha, model.beta, model.gamma, float(model.n_edges)
    jac = np.array([[-b, g], [-a, -(a + b + g)]])
    forcing = np.array([0.0, a * n])

    def rhs(_, v):
        return jac @ v + forcing

    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (0.0, float(t_eval.max())), [0.0, 0.0], t_eval=t_eval, method="DOP853",
                    rtol=rtol, atol=atol * max(n, 1.0))
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0], sol.y[1]


# -- dynamic: stochastic -----------------------------------------------------

def dynamic_leakage_simulate(model: LeakageModel, horizon: float, seed: int, n_records: int = 201,
                             record_times=None, l0: int = 0, u0: int = 0):
    """Next-event simulation; returns an array of rows ``(t, L, U, X)``."""
    if model.n_edges < 1:
        raise ValueError("need at least one possible edge")
    if record_times is None:
        record_times = np.linspace(0.0, horizon, n_records)
    record_times = np.asarray(record_times, dtype=np.float64)
    if np.any(np.diff(record_times) < 0) or (len(record_times) and record_times[-1] > horizon):
        raise ValueError("record times must be sorted and within the horizon")
    states, _ = _core.gillespie_lux(int(model.n_edges), int(l0), int(u0), float(model.alpha),
                                    float(model.beta), float(model.gamma), float(horizon),
                                    int(seed) & 0xFFFFFFFFFFFFFFFF, record_times)
    return np.column_stack([record_times, states.astype(float)])


def simulated_ratios(model: LeakageModel, t: float, trials: int, seed: int) -> np.ndarray:
    """``L/(L+U)`` at time ``t`` for independent trials (NaN when L+U = 0)."""
    out = np.empty(trials)
    for k in range(trials):
        traj = dynamic_leakage_simulate(model, t, seed=seed * 1_000_003 + k, record_times=[t])
        L, U = traj[-1, 1], traj[-1, 2]
        out[k] = L / (L + U) if L + U > 0 else np.nan
    return out
