"""Anonymity set of a message author, seen from a receiving node.

A copy that has travelled ``n`` hops arrives with priority ``S_n`` where
``S_k = Tr01(p_k S_{k-1} + z_k)``, ``S_0 = 1``. Seeing ``S = 1`` (saturated)
the observer weighs each hop count by ``P(S=1 | n) P(n)``. The hop prior
comes from minimum temporal hop counts over a mobility trace; the per-hop
multipliers ``p_k`` come from node pairs of a social graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _core
from ..trust import TrustParams, sigmoid_multiplier, trust_score


@dataclass
class HopDistribution:
    """``pmf[n] = P(N = n)`` over reachable sampled pairs, n = 0..n_max."""

    pmf: np.ndarray
    unreachable: float
    n_pairs: int

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=float)
        if np.any(self.pmf < 0):
            raise ValueError("pmf must be nonnegative")
        total = self.pmf.sum()
        if total > 0 and abs(total - 1.0) > 1e-9:
            raise ValueError("pmf must sum to 1")

    @property
    def n_max(self) -> int:
        return len(self.pmf) - 1


def contacts_from_trace(trace, encounter_range: float = 20.0):
    """All in-range (t, u, v) contacts, in step order."""
    ct, cu, cv = [], [], []
    for s in range(trace.n_steps):
        xs, ys = trace.x[s], trace.y[s]
        present = np.flatnonzero(~np.isnan(xs))
        if len(present) < 2:
            continue
        pairs = _core.range_pairs(np.ascontiguousarray(xs[present]), np.ascontiguousarray(ys[present]),
                                  float(encounter_range))
        if len(pairs):
            ct.append(np.full(len(pairs), float(trace.times[s])))
            cu.append(present[pairs[:, 0]])
            cv.append(present[pairs[:, 1]])
    if not ct:
        return np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(ct), np.concatenate(cu).astype(np.int64), np.concatenate(cv).astype(np.int64)


def hop_matrix(trace, encounter_range: float = 20.0, sources=None, max_hops: int = 64, contacts=None):
    """``H[i, j]``: minimum temporal hops from source ``sources[i]`` to node j (-1: unreachable)."""
    ct, cu, cv = contacts if contacts is not None else contacts_from_trace(trace, encounter_range)
    n = trace.n_nodes
    sources = range(n) if sources is None else sources
    t0 = float(trace.times[0]) if trace.n_steps else 0.0
    return np.array([_core.temporal_hops(n, int(s), t0, ct, cu, cv, max_hops) for s in sources],
                    dtype=np.int64).reshape(-1, n)


def hop_pmf_from_matrix(H, sources, n_max=None) -> HopDistribution:
    sources = np.asarray(sources)
    mask = np.ones(H.shape, dtype=bool)
    mask[np.arange(len(sources)), sources] = False  # drop (i, i)
    vals = H[mask]
    reach = vals[vals >= 0]
    total = len(vals)
    top = int(reach.max()) if len(reach) else 0
    n_max = top if n_max is None else n_max
    # pairs needing more than n_max hops go to the unreachable bucket
    counts = np.bincount(reach[reach <= n_max], minlength=n_max + 1).astype(float)
    kept = counts.sum()
    pmf = counts / kept if kept else counts
    unreachable = (total - kept) / total if total else 0.0
    return HopDistribution(pmf, float(unreachable), int(total))


def empirical_hop_pmf(trace, encounter_range: float = 20.0, n_sources=None, seed: int = 0,
                      n_max=None, max_hops: int = 64) -> HopDistribution:
    """Hop prior from temporal BFS. ``n_sources`` samples sources (all if None)."""
    n = trace.n_nodes
    if n_sources is None or n_sources >= n:
        sources = np.arange(n)
    else:
        sources = np.sort(np.random.default_rng(seed).choice(n, n_sources, replace=False))
    H = hop_matrix(trace, encounter_range, sources, max_hops)
    return hop_pmf_from_matrix(H, sources, n_max)


class MultiplierDist:
    """Distribution of the per-hop multiplier ``p`` (values in [0, 1])."""

    def __init__(self, sampler, label: str = ""):
        self._sampler = sampler
        self.label = label

    def sample(self, rng, size) -> np.ndarray:
        return self._sampler(rng, size)

    @classmethod
    def constant(cls, value: float) -> "MultiplierDist":
        if not 0.0 <= value <= 1.0:
            raise ValueError("multiplier must be in [0, 1]")
        return cls(lambda rng, size: np.full(size, float(value)), f"constant({value})")

    @classmethod
    def empirical(cls, values) -> "MultiplierDist":
        vals = np.asarray(values, dtype=float)
        if not len(vals) or np.any((vals < 0) | (vals > 1)):
            raise ValueError("empirical multipliers must be a nonempty set in [0, 1]")
        return cls(lambda rng, size: vals[rng.integers(len(vals), size=size)], "empirical")

    @classmethod
    def from_graph(cls, graph, params: TrustParams, n_pairs: int = 20_000, seed: int = 0,
                   psi_cap: int = 30) -> "MultiplierDist":
        """Multipliers seen by random ordered node pairs of ``graph``."""
        rng = np.random.default_rng(seed)
        adj = [sorted(a) for a in graph.adj]
        sets = [set(a) for a in adj]
        vals = np.empty(n_pairs)
        for k in range(n_pairs):
            i, j = rng.choice(graph.n, 2, replace=False)
            si = sets[i] if len(adj[i]) <= psi_cap else set(rng.choice(adj[i], psi_cap, replace=False).tolist())
            sj = sets[j] if len(adj[j]) <= psi_cap else set(rng.choice(adj[j], psi_cap, replace=False).tolist())
            vals[k] = sigmoid_multiplier(trust_score(len(si & sj), len(si), params), params)
        return cls.empirical(vals)

    @classmethod
    def exponential_mixture(cls, weights, rates, params: TrustParams) -> "MultiplierDist":
        """Trust ratio drawn from a sum of exponentials truncated to [0, 1],
        then mapped through the sigmoid."""
        w = np.asarray(weights, dtype=float)
        lam = np.asarray(rates, dtype=float)
        if len(w) != len(lam) or np.any(w < 0) or w.sum() <= 0 or np.any(lam <= 0):
            raise ValueError("need matching positive weights and rates")
        # component mass on [0, 1]
        mass = w * -np.expm1(-lam)
        probs = mass / mass.sum()
        rho, tau = params.rho, params.tau

        def sampler(rng, size):
            comp = rng.choice(len(w), size=size, p=probs)
            u = rng.random(size)
            lc = lam[comp]
            t = -np.log1p(-u * -np.expm1(-lc)) / lc
            return 1.0 / (1.0 + np.exp(-rho * (t - tau)))

        return cls(sampler, "exponential_mixture")


@dataclass
class AnonymityModel:
    params: TrustParams
    multipliers: MultiplierDist
    samples: int = 20_000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 10_000:
            raise ValueError("need at least 10^4 Monte Carlo samples")


def saturation_curve(model: AnonymityModel, n_max: int) -> np.ndarray:
    """``P(S = 1 | N = n)`` for n = 0..n_max from one set of trajectories.

    ``S = 1`` means the pre-truncation value reached 1 at the last hop.
    """
    rng = np.random.default_rng(model.seed)
    mu, sigma = model.params.mu, model.params.sigma
    s = np.ones(model.samples)
    out = np.empty(n_max + 1)
    out[0] = 1.0
    for k in range(1, n_max + 1):
        p = model.multipliers.sample(rng, model.samples)
        z = rng.normal(mu, sigma, model.samples) if sigma > 0 else np.full(model.samples, mu)
        raw = p * s + z
        out[k] = np.count_nonzero(raw >= 1.0) / model.samples
        s = np.clip(raw, 0.0, 1.0)
    return out


def priority_likelihood(model: AnonymityModel, n: int) -> float:
    if n < 0:
        raise ValueError("hop count must be nonnegative")
    return float(saturation_curve(model, n)[n])


def hop_posterior(prior: HopDistribution, likelihood) -> np.ndarray:
    lik = np.asarray(likelihood)[: len(prior.pmf)]
    post = prior.pmf * lik
    total = post.sum()
    return post / total if total > 0 else post


def confidence_hop_sets(posterior, confidence_grid):
    """Greedy smallest hop set reaching each confidence (ties: fewer hops first).

    At confidence 1 every hop count in the prior's support is included.
    """
    order = sorted(range(len(posterior)), key=lambda n: (-posterior[n], n))
    cum = np.cumsum([posterior[n] for n in order])
    out = []
    for c in confidence_grid:
        if c >= 1.0:
            out.append(set(order))
            continue
        k = int(np.searchsorted(cum, c - 1e-12, side="left")) + 1
        out.append(set(order[: min(k, len(order))]))
    return out


def anonymity_set_curve(model: AnonymityModel, trace, confidence_grid, encounter_range: float = 20.0,
                        observers=None, n_max=None, max_hops: int = 64, return_prior: bool = False):
    """``[(confidence, set_fraction)]`` averaged over observers.

    For observer o the candidate authors at hop count n are the nodes whose
    minimum temporal hop count to o is n; the set for confidence c is the
    union over the chosen hop counts, as a fraction of the other nodes.
    """
    n = trace.n_nodes
    H = hop_matrix(trace, encounter_range, None, max_hops)  # H[src, dst]
    prior = hop_pmf_from_matrix(H, np.arange(n), n_max)
    lik = saturation_curve(model, prior.n_max)
    post = hop_posterior(prior, lik)
    # zero-probability hop counts outside the support are never chosen
    support = [k for k in range(len(post)) if prior.pmf[k] > 0]
    post_sup = np.array([post[k] for k in support])
    sets = [{support[i] for i in s} for s in confidence_hop_sets(post_sup, confidence_grid)]
    observers = np.arange(n) if observers is None else np.asarray(observers)
    curve = []
    for c, chosen in zip(confidence_grid, sets):
        fracs = []
        for o in observers:
            col = np.delete(H[:, o], o)
            fracs.append(np.isin(col, list(chosen)).sum() / max(n - 1, 1))
        curve.append((float(c), float(np.mean(fracs))))
    if return_prior:
        return curve, prior, post
    return curve
