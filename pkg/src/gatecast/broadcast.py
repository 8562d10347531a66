"""Resource states and the multi-agent phase broadcast protocol on a DAG."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import dag as dagmod
from .dag import DagNetwork, Edge
from .errors import BranchExplosion, DimensionMismatch, PhaseMissing
from .qudit import (
    Register,
    SiteLayout,
    StateSpec,
    apply_controlled_shift,
    apply_local_phase,
    fourier_branches,
    make_state,
    measure_fourier,
    reorder,
    tensor,
)

MAX_BRANCHES = 10**5


@dataclass(frozen=True)
class Correction:
    """Phase correction ``U(2 pi s / d)`` driven by a predecessor's outcome."""

    source: int
    outcome: int
    source_dim: int

    @property
    def angle(self) -> float:
        return 2 * math.pi * self.outcome / self.source_dim


@dataclass(frozen=True)
class VertexEvent:
    vertex: int
    own_phase: Optional[float]
    corrections: tuple[Correction, ...]
    outcome: Optional[int] = None
    probability: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "vertex": self.vertex,
            "own_phase": self.own_phase,
            "corrections": [[c.source, c.outcome, c.source_dim] for c in self.corrections],
            "outcome": self.outcome,
            "probability": self.probability,
        }


@dataclass(frozen=True)
class ProtocolTranscript:
    events: tuple[VertexEvent, ...] = ()

    def outcomes(self) -> dict[int, int]:
        return {e.vertex: e.outcome for e in self.events if e.outcome is not None}

    def to_json(self) -> list:
        return [e.to_json() for e in self.events]


@dataclass(frozen=True, eq=False)
class BroadcastResult:
    sink_state: Register
    transcript: ProtocolTranscript
    theta_effective: dict[int, float]
    probability: float = 1.0
    outcomes: dict[int, int] = field(default_factory=dict)


def edge_application_order(g: DagNetwork) -> list[Edge]:
    """Edges in the order their controlled shifts are applied.

    Tails are visited in reverse topological order, so every edge leaving a
    vertex is applied before any edge entering it; edges sharing a tail are
    ordered by head id.
    """
    out = []
    for v in reversed(dagmod.topo_sort(g)):
        out.extend(Edge(v, w) for w in g.children(v))
    return out


def sink_register(g: DagNetwork, psi: StateSpec) -> Register:
    """The input state on the sink sites, in ascending sink id order."""
    sinks = g.sink_list()
    layout = SiteLayout(tuple(g.dims[v] for v in sinks), tuple(sinks))
    if isinstance(psi, Register):
        if psi.labels != layout.labels and set(psi.labels) == set(layout.labels):
            psi = reorder(psi, layout.labels)
        if psi.dims != layout.dims:
            raise DimensionMismatch(f"psi dims {psi.dims} do not match sink dims {layout.dims}")
    return make_state(layout, psi)


def build_resource_state(g: DagNetwork, psi: StateSpec) -> Register:
    """Entangle ``|0>`` on every non-sink with ``psi`` on the sinks.

    Each edge ``v -> w`` contributes a shift of the tail ``v`` controlled by
    the head ``w``.
    """
    dagmod.require_valid(g)
    sink = sink_register(g, psi)
    inner = [v for v in g.vertices if not g.is_sink(v)]
    zeros = make_state(SiteLayout(tuple(g.dims[v] for v in inner), tuple(inner)), "zero")
    reg = reorder(tensor(zeros, sink), list(g.vertices))
    for tail, head in edge_application_order(g):
        reg = apply_controlled_shift(reg, control=head, target=tail)
    return reg


def _check_phases(g: DagNetwork, phases: Mapping[int, float]) -> dict[int, float]:
    phases = {int(k): float(v) for k, v in phases.items()}
    for v in g.vertices:
        if not g.is_sink(v) and v not in phases:
            raise PhaseMissing(f"no phase for non-sink vertex {v}")
    extra = [v for v in phases if v not in g.vertices or g.is_sink(v)]
    if extra:
        raise ValueError(f"phases given for sinks or unknown vertices: {sorted(extra)}")
    return phases


def theta_effective(g: DagNetwork, phases: Mapping[int, float]) -> dict[int, float]:
    """Accumulated phase at each sink: path-count weighted sum over predecessors."""
    phases = _check_phases(g, phases)
    out = {}
    for v in g.sink_list():
        n = dagmod.path_counts_to(g, v)
        out[v] = float(sum(n[w] * phases[w] for w in phases))
    return out


def expected_sink_state(g: DagNetwork, phases: Mapping[int, float], psi: StateSpec) -> Register:
    """Closed-form protocol output, independent of any measurement."""
    reg = sink_register(g, psi)
    for v, theta in theta_effective(g, phases).items():
        reg = apply_local_phase(reg, v, theta)
    return reg


def branch_count(g: DagNetwork) -> int:
    return math.prod(g.dims[v] for v in g.vertices if not g.is_sink(v))


def run_protocol(
    g: DagNetwork,
    phases: Mapping[int, float],
    psi: StateSpec = "plus",
    *,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    resource: Optional[Register] = None,
    max_branches: int = MAX_BRANCHES,
):
    """Run the broadcast protocol.

    Non-sinks act in topological order: own phase, predecessor corrections,
    Fourier measurement. Sinks then apply their corrections.

    With ``seed`` or ``rng`` one branch is sampled and a single
    :class:`BroadcastResult` is returned; otherwise every outcome combination
    is enumerated and a list is returned, ordered by outcome tuple.
    ``resource`` replaces the freshly built resource state (``psi`` is then
    ignored).
    """
    dagmod.require_valid(g)
    phases = _check_phases(g, phases)
    reg = build_resource_state(g, psi) if resource is None else resource
    if tuple(reg.labels) != tuple(g.vertices) or reg.dims != g.dims:
        raise DimensionMismatch("resource register does not match the network")
    order = g.non_sinks()
    thetas = theta_effective(g, phases)
    sample = seed is not None or rng is not None
    if sample and rng is None:
        rng = np.random.default_rng(seed)
    if not sample and branch_count(g) > max_branches:
        raise BranchExplosion(f"{branch_count(g)} branches exceed the cap of {max_branches}")

    def corrections(v, outcomes):
        return tuple(Correction(u, outcomes[u], g.dims[u]) for u in g.parents(v))

    def finish(reg, outcomes, events, prob):
        sink_events = []
        for v in g.sink_list():
            cs = corrections(v, outcomes)
            for c in cs:
                reg = apply_local_phase(reg, v, c.angle)
            sink_events.append(VertexEvent(v, None, cs))
        return BroadcastResult(
            sink_state=reg,
            transcript=ProtocolTranscript(tuple(events) + tuple(sink_events)),
            theta_effective=dict(thetas),
            probability=prob,
            outcomes=dict(outcomes),
        )

    def prepared(reg, v, outcomes):
        cs = corrections(v, outcomes)
        angle = phases[v] + sum(c.angle for c in cs)
        return apply_local_phase(reg, v, angle), cs

    if sample:
        outcomes, events, prob = {}, [], 1.0
        for v in order:
            reg, cs = prepared(reg, v, outcomes)
            br = measure_fourier(reg, v, rng=rng)
            reg, outcomes[v] = br.state, br.outcome
            prob *= br.probability
            events.append(VertexEvent(v, phases[v], cs, br.outcome, br.probability))
        return finish(reg, outcomes, events, prob)

    results = []

    def walk(reg, i, outcomes, events, prob):
        if i == len(order):
            results.append(finish(reg, outcomes, events, prob))
            return
        v = order[i]
        reg, cs = prepared(reg, v, outcomes)
        for br in fourier_branches(reg, v):
            ev = VertexEvent(v, phases[v], cs, br.outcome, br.probability)
            walk(br.state, i + 1, {**outcomes, v: br.outcome}, events + [ev], prob * br.probability)

    walk(reg, 0, {}, [], 1.0)
    return results
