"""Directed acyclic broadcast networks and their qudit dimension assignment.

Vertices are dense integers ``0..n-1``. An edge ``(tail, head)`` points from
the sender towards the receiver. Every vertex carries a qudit whose dimension
obeys ``d(v) - 1 == sum(d(w) - 1 for w in children(v))`` for non-sinks.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Optional

import numpy as np

from .errors import CycleDetected, InvalidNetwork, MissingSinkDim, UnknownVertex


class Edge(NamedTuple):
    tail: int
    head: int


@dataclass(frozen=True)
class DagNetwork:
    """Immutable network topology, optionally with per-vertex dimensions.

    A network without ``dims`` is a bare topology; :func:`assign_dims` turns
    it into a full network.
    """

    vertex_count: int
    edges: tuple[Edge, ...]
    dims: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValueError("vertex_count must be non-negative")
        edges = tuple(Edge(int(t), int(h)) for t, h in self.edges)
        seen = set()
        for t, h in edges:
            for x in (t, h):
                if not 0 <= x < self.vertex_count:
                    raise UnknownVertex(x)
            if t == h:
                raise ValueError(f"self-loop at vertex {t}")
            if (t, h) in seen:
                raise ValueError(f"parallel edge {t}->{h}")
            seen.add((t, h))
        object.__setattr__(self, "edges", edges)
        if self.dims is not None:
            dims = tuple(int(d) for d in self.dims)
            if len(dims) != self.vertex_count:
                raise ValueError("dims must list one dimension per vertex")
            object.__setattr__(self, "dims", dims)

    @classmethod
    def from_edges(cls, vertex_count, edges, dims=None) -> "DagNetwork":
        return cls(vertex_count, tuple(edges), None if dims is None else tuple(dims))

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)

    @cached_property
    def _children(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in self.vertices]
        for t, h in self.edges:
            out[t].append(h)
        return tuple(tuple(sorted(c)) for c in out)

    @cached_property
    def _parents(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in self.vertices]
        for t, h in self.edges:
            out[h].append(t)
        return tuple(tuple(sorted(p)) for p in out)

    def _check(self, v: int) -> int:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < self.vertex_count):
            raise UnknownVertex(v)
        return int(v)

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[self._check(v)]

    def parents(self, v: int) -> tuple[int, ...]:
        return self._parents[self._check(v)]

    def dim(self, v: int) -> int:
        if self.dims is None:
            raise ValueError("network has no dimensions assigned")
        return self.dims[self._check(v)]

    def is_sink(self, v: int) -> bool:
        return not self.children(v)

    def non_sinks(self) -> list[int]:
        """Non-sink vertices in topological order."""
        return [v for v in topo_sort(self) if self._children[v]]

    def sink_list(self) -> list[int]:
        """Sinks in ascending id order (the site order of sink registers)."""
        return [v for v in self.vertices if not self._children[v]]

    def without_out_edges(self, v: int) -> "DagNetwork":
        """Copy of the network with every edge leaving ``v`` removed.

        Dimensions are kept as they are, so ``v`` becomes a sink of its
        original dimension.
        """
        v = self._check(v)
        return DagNetwork(
            self.vertex_count, tuple(e for e in self.edges if e.tail != v), self.dims
        )

    def subgraph(self, keep: Iterable[int]) -> tuple["DagNetwork", dict[int, int]]:
        """Induced subgraph on ``keep``, relabelled densely in ascending order.

        Returns the new network and the old-to-new id mapping.
        """
        kept = sorted({self._check(v) for v in keep})
        mapping = {old: new for new, old in enumerate(kept)}
        edges = tuple(
            Edge(mapping[t], mapping[h])
            for t, h in self.edges
            if t in mapping and h in mapping
        )
        dims = None if self.dims is None else tuple(self.dims[v] for v in kept)
        return DagNetwork(len(kept), edges, dims), mapping

    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.vertex_count else 1

    def to_json(self) -> dict:
        """Graph file representation; only sink dimensions are written."""
        doc = {"vertices": self.vertex_count, "edges": [list(e) for e in self.edges]}
        if self.dims is not None:
            doc["sink_dims"] = {str(v): self.dims[v] for v in self.sink_list()}
        return doc


def topo_sort(g: DagNetwork) -> list[int]:
    """Kahn's algorithm; ready vertices are released smallest id first."""
    indeg = [0] * g.vertex_count
    for _, h in g.edges:
        indeg[h] += 1
    ready = [v for v in g.vertices if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in g.children(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != g.vertex_count:
        raise CycleDetected("graph is not acyclic")
    return order


def sinks(g: DagNetwork) -> set[int]:
    return {v for v in g.vertices if not g.children(v)}


def sources(g: DagNetwork) -> set[int]:
    return {v for v in g.vertices if not g.parents(v)}


def _closure(start: int, step) -> set[int]:
    seen: set[int] = set()
    queue = deque(step(start))
    while queue:
        x = queue.popleft()
        if x not in seen:
            seen.add(x)
            queue.extend(step(x))
    return seen


def reach(g: DagNetwork, x: int) -> tuple[set[int], set[int]]:
    """Return ``(Succ(x), Pred(x))``; neither set contains ``x`` on a DAG."""
    x = g._check(x)
    return _closure(x, g.children), _closure(x, g.parents)


def path_counts_to(g: DagNetwork, target: int) -> list[int]:
    """Number of directed paths from every vertex to ``target``.

    Entry ``target`` itself is 0, matching :func:`count_paths`.
    """
    target = g._check(target)
    n = [0] * g.vertex_count
    n[target] = 1
    for v in reversed(topo_sort(g)):
        if v != target:
            n[v] = sum(n[w] for w in g.children(v))
    n[target] = 0
    return n


def count_paths(g: DagNetwork, u: int, v: int) -> int:
    """Number of distinct directed paths from ``u`` to ``v`` (0 when u == v)."""
    g._check(u)
    return path_counts_to(g, v)[u]


def assign_dims(topology: DagNetwork, sink_dims: Mapping[int, int]) -> DagNetwork:
    """Fill in non-sink dimensions bottom-up from the sink dimensions."""
    order = topo_sort(topology)
    dims = [0] * topology.vertex_count
    for v in reversed(order):
        kids = topology.children(v)
        if kids:
            dims[v] = 1 + sum(dims[w] - 1 for w in kids)
            continue
        d = sink_dims.get(v)
        if d is None:
            raise MissingSinkDim(f"no dimension given for sink {v}")
        if int(d) < 2:
            raise MissingSinkDim(f"sink {v} needs dimension >= 2, got {d}")
        dims[v] = int(d)
    return DagNetwork(topology.vertex_count, topology.edges, tuple(dims))


def validate(g: DagNetwork) -> list[str]:
    """All violations of the network invariants; an empty list means valid."""
    problems = []
    try:
        topo_sort(g)
    except CycleDetected:
        problems.append("not acyclic")
    if g.dims is None:
        problems.append("no dimensions assigned")
        return problems
    for v in g.vertices:
        if g.dims[v] < 2:
            problems.append(f"dimension of {v} below 2")
    for v in g.vertices:
        kids = g.children(v)
        if kids and g.dims[v] - 1 != sum(g.dims[w] - 1 for w in kids):
            problems.append(f"dimension recursion broken at {v}")
    return problems


def require_valid(g: DagNetwork) -> DagNetwork:
    problems = validate(g)
    if problems:
        raise InvalidNetwork(problems)
    return g


def network_from_json(doc: Mapping) -> DagNetwork:
    """Build a network from the graph-file mapping (non-sink dims ignored)."""
    topology = DagNetwork(int(doc["vertices"]), tuple(tuple(e) for e in doc["edges"]))
    raw = doc.get("sink_dims", {})
    sink_dims = {int(k): int(d) for k, d in raw.items()}
    return assign_dims(topology, sink_dims)


def load_network(path) -> DagNetwork:
    with open(path) as fh:
        return network_from_json(json.load(fh))


def random_network(
    rng: np.random.Generator,
    max_vertices: int = 7,
    edge_prob: float = 0.45,
    sink_dims: tuple[int, ...] = (2,),
    max_total_dim: int = 4096,
    min_vertices: int = 2,
    max_tries: int = 1000,
) -> DagNetwork:
    """Sample a connected-ish random DAG whose register fits ``max_total_dim``.

    Edges only go from lower to higher ids, so the id order is already a
    topological order.
    """
    for _ in range(max_tries):
        n = int(rng.integers(min_vertices, max_vertices + 1))
        edges = []
        for j in range(1, n):
            # every vertex but 0 gets at least one parent so graphs stay connected
            first = int(rng.integers(0, j))
            edges.append(Edge(first, j))
            for i in range(j):
                if i != first and rng.random() < edge_prob:
                    edges.append(Edge(i, j))
        topology = DagNetwork(n, tuple(sorted(edges)))
        sd = {v: int(rng.choice(sink_dims)) for v in sinks(topology)}
        g = assign_dims(topology, sd)
        if g.total_dim() <= max_total_dim:
            return g
    raise RuntimeError("could not sample a network within the dimension budget")


def chain(n: int, sink_dim: int = 2) -> DagNetwork:
    """``0 -> 1 -> ... -> n-1``; every vertex ends up with ``sink_dim`` levels."""
    topology = DagNetwork(n, tuple(Edge(i, i + 1) for i in range(n - 1)))
    return assign_dims(topology, {n - 1: sink_dim})
