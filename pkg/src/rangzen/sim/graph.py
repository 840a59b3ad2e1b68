"""Undirected social graphs: Barabasi-Albert generation and edge-list files."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


@dataclass
class SocialGraph:
    n: int
    adj: list = field(default=None)
    model: str = "imported"

    def __post_init__(self):
        if self.adj is None:
            self.adj = [set() for _ in range(self.n)]

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise GraphError(f"self-loop on node {u}")
        self.adj[u].add(v)
        self.adj[v].add(u)

    def remove_edge(self, u: int, v: int) -> None:
        self.adj[u].discard(v)
        self.adj[v].discard(u)

    def neighbors(self, u: int) -> set:
        return self.adj[u]

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adj], dtype=np.int64)

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in range(self.n) for v in self.adj[u] if u < v)

    def n_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def copy(self) -> "SocialGraph":
        return SocialGraph(self.n, [set(a) for a in self.adj], self.model)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# model={self.model}\n")
            fh.write(f"# nodes={self.n}\n")
            for u, v in self.edges():
                fh.write(f"{u},{v}\n")

    @classmethod
    def load(cls, path) -> "SocialGraph":
        model = "imported"
        n = None
        edges = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    m = re.match(r"#\s*model=(.*)", line)
                    if m:
                        model = m.group(1).strip()
                    m = re.match(r"#\s*nodes=(\d+)", line)
                    if m:
                        n = int(m.group(1))
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise GraphError(f"{path}: line {lineno}: expected 'u,v'")
                try:
                    u, v = int(parts[0]), int(parts[1])
                except ValueError:
                    raise GraphError(f"{path}: line {lineno}: node ids must be integers") from None
                if u < 0 or v < 0:
                    raise GraphError(f"{path}: line {lineno}: negative node id")
                if u == v:
                    raise GraphError(f"{path}: line {lineno}: self-loop")
                edges.append((u, v))
        top = max((max(e) for e in edges), default=-1) + 1
        n = top if n is None else n
        if top > n:
            raise GraphError(f"{path}: edge references node {top - 1} but nodes={n}")
        g = cls(n, model=model)
        for u, v in edges:
            g.add_edge(u, v)
        return g


def gen_social_graph(n_nodes: int, m: int, seed: int) -> SocialGraph:
    """Barabasi-Albert: a clique on nodes ``0..m-1``, then each new node
    attaches ``m`` edges to distinct existing nodes with probability
    proportional to degree. Edge count is ``m*(n-m) + m*(m-1)/2``.
    """
    if m < 1 or n_nodes <= m:
        raise GraphError("need m >= 1 and n > m")
    rng = np.random.default_rng(seed)
    g = SocialGraph(n_nodes, model=f"barabasi_albert(m={m})")
    # one entry per edge endpoint, so uniform picks are degree-proportional
    ends: list[int] = []
    for u in range(m):
        for v in range(u + 1, m):
            g.add_edge(u, v)
            ends += (u, v)
    for new in range(m, n_nodes):
        if not ends:
            targets = list(range(new))[:m]
        else:
            targets = []
            chosen = set()
            while len(targets) < m:
                t = ends[int(rng.integers(len(ends)))]
                if t not in chosen:
                    chosen.add(t)
                    targets.append(t)
        for t in targets:
            g.add_edge(new, t)
            ends += (new, t)
    return g
