"""Weighted directed communication graphs.

An edge ``(i, j, w)`` means agent ``i`` *receives* information from agent
``j`` with weight ``w > 0``; information flows ``j -> i``.  Node indices are
zero-based throughout the Python API.  The one-based ``"i <- j : w"`` literal
used in config files is handled by :func:`parse_edge`.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .constants import BALANCE_TOL, WEIGHT_EQ_TOL

__all__ = [
    "DirectedGraph",
    "GraphError",
    "laplacian",
    "union",
    "centers",
    "is_quasi_strongly_connected",
    "is_strongly_connected",
    "is_balanced",
    "parse_edge",
    "parse_graph",
    "directed_ring",
]


class GraphError(ValueError):
    """Raised for malformed graphs or incompatible graph operations."""


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable weighted digraph over ``n_nodes`` agents.

    ``edges`` maps ``(receiver, sender)`` to a positive weight.
    """

    n_nodes: int
    edges: dict = field(default_factory=dict)
    _in_adj: tuple = field(init=False, repr=False)
    _out_adj: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise GraphError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        clean = {}
        for (i, j), w in dict(self.edges).items():
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise GraphError(f"edge ({i}, {j}) out of range for {self.n_nodes} nodes")
            if i == j:
                raise GraphError(f"self-edge on node {i}")
            if not w > 0 or not np.isfinite(w):
                raise GraphError(f"edge ({i}, {j}) has non-positive weight {w}")
            clean[(i, j)] = w
        in_adj = [[] for _ in range(self.n_nodes)]
        out_adj = [[] for _ in range(self.n_nodes)]
        for (i, j), w in sorted(clean.items()):
            in_adj[i].append((j, w))
            out_adj[j].append(i)
        object.__setattr__(self, "edges", clean)
        object.__setattr__(self, "_in_adj", tuple(tuple(a) for a in in_adj))
        object.__setattr__(self, "_out_adj", tuple(tuple(a) for a in out_adj))

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[Sequence]) -> "DirectedGraph":
        """Build from ``(receiver, sender)`` or ``(receiver, sender, weight)`` tuples.

        Duplicate ordered pairs are rejected.
        """
        table = {}
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if (i, j) in table:
                raise GraphError(f"duplicate edge ({i}, {j})")
            table[(i, j)] = w
        return cls(n_nodes, table)

    def neighbors(self, i: int) -> tuple:
        """Receiver adjacency list of node ``i``: ``((j, weight), ...)``."""
        return self._in_adj[i]

    def successors(self, j: int) -> tuple:
        """Nodes that receive from ``j``."""
        return self._out_adj[j]

    def in_degree(self, i: int) -> float:
        return sum(w for _, w in self._in_adj[i])

    def edge_list(self) -> list:
        return [(i, j, w) for (i, j), w in sorted(self.edges.items())]

    def __len__(self):
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        if self.n_nodes != other.n_nodes or self.edges.keys() != other.edges.keys():
            return False
        return all(abs(w - other.edges[k]) <= WEIGHT_EQ_TOL for k, w in self.edges.items())

    def __hash__(self):
        return hash((self.n_nodes, frozenset(self.edges)))

    def to_literal(self) -> list:
        """One-based ``"i <- j : w"`` strings, the config-file form."""
        return [f"{i + 1} <- {j + 1} : {w:g}" for i, j, w in self.edge_list()]


def laplacian(g: DirectedGraph) -> np.ndarray:
    """Laplacian with ``L[i, j] = -w`` for each edge ``j -> i`` and row sums zero."""
    L = np.zeros((g.n_nodes, g.n_nodes))
    for (i, j), w in g.edges.items():
        L[i, j] -= w
        L[i, i] += w
    return L


def union(gs: Sequence[DirectedGraph]) -> DirectedGraph:
    """Edge-set union; a pair present in several graphs keeps its maximum weight."""
    gs = list(gs)
    if not gs:
        raise GraphError("union of an empty list of graphs")
    n = gs[0].n_nodes
    merged = {}
    for g in gs:
        if g.n_nodes != n:
            raise GraphError(f"cannot union graphs on {n} and {g.n_nodes} nodes")
        for k, w in g.edges.items():
            merged[k] = max(w, merged.get(k, 0.0))
    return DirectedGraph(n, merged)


def _reachable_from(g: DirectedGraph, source: int) -> set:
    seen = {source}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for r in g.successors(v):
            if r not in seen:
                seen.add(r)
                queue.append(r)
    return seen


def centers(g: DirectedGraph) -> set:
    """All nodes with a directed path to every other node."""
    return {v for v in range(g.n_nodes) if len(_reachable_from(g, v)) == g.n_nodes}


def is_quasi_strongly_connected(g: DirectedGraph) -> tuple[bool, set]:
    """Return ``(has_center, centers)``."""
    c = centers(g)
    return bool(c), c


def is_strongly_connected(g: DirectedGraph) -> bool:
    return len(centers(g)) == g.n_nodes


def is_balanced(g: DirectedGraph, tol: float = BALANCE_TOL) -> bool:
    """Every column of the Laplacian sums to zero (in-weight equals out-weight)."""
    return bool(np.all(np.abs(laplacian(g).sum(axis=0)) <= tol))


_EDGE_RE = re.compile(
    r"^\s*(?P<i>\d+)\s*<-\s*(?P<j>\d+)\s*(?::\s*(?P<w>[-+0-9.eE]+))?\s*$"
)


def parse_edge(text: str) -> tuple[int, int, float]:
    """Parse ``"i <- j : w"`` (one-based, weight optional, default 1).

    Returns a zero-based ``(receiver, sender, weight)`` triple.
    """
    m = _EDGE_RE.match(text)
    if m is None:
        raise GraphError(f"cannot parse edge literal {text!r}; expected 'i <- j : weight'")
    i, j = int(m["i"]), int(m["j"])
    if i < 1 or j < 1:
        raise GraphError(f"edge literal {text!r}: node indices start at 1")
    w = float(m["w"]) if m["w"] is not None else 1.0
    return i - 1, j - 1, w


def parse_graph(n_nodes: int, literals: Iterable[str]) -> DirectedGraph:
    return DirectedGraph.from_edges(n_nodes, [parse_edge(s) for s in literals])


def directed_ring(n: int, weight: float = 1.0, reverse: bool = False) -> DirectedGraph:
    """Cycle ``0 -> 1 -> ... -> n-1 -> 0`` (or the reverse orientation)."""
    if reverse:
        return DirectedGraph.from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)])
    return DirectedGraph.from_edges(n, [((i + 1) % n, i, weight) for i in range(n)])
