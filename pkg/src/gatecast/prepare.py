"""Constant-round preparation of broadcast resource states.

Every non-sink vertex ``v`` gets an ancilla ``v'`` of the same dimension.
A controlled phase word couples the ancilla to ``v`` and its children; one
round of Fourier measurements on the ancillas followed by one round of shift
corrections on the main register yields the resource state.

Measuring an ancilla in the computational basis instead detaches the edges
leaving ``v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from . import dag as dagmod
from .broadcast import MAX_BRANCHES, sink_register
from .dag import DagNetwork
from .errors import AncillaAlreadyMeasured, BranchExplosion, LayoutMismatch, UnknownVertex
from .qudit import (
    Register,
    SiteLayout,
    StateSpec,
    apply_controlled_phase_word,
    apply_phase_word,
    apply_shift_power,
    fourier_branches,
    make_state,
    measure_computational,
    measure_fourier,
    reorder,
    tensor,
)


def ancilla(v: int) -> str:
    return f"{v}'"


@dataclass(frozen=True)
class AncillaStatus:
    kind: str  # "unmeasured" | "fourier" | "computational"
    outcome: Optional[int] = None


UNMEASURED = AncillaStatus("unmeasured")


@dataclass(frozen=True, eq=False)
class PrepState:
    """Main register plus the still-unmeasured ancillas.

    ``graph`` is the current network: detaching ``v`` drops its outgoing
    edges, so ``v`` is a sink of ``graph`` from then on.
    """

    register: Register
    graph: DagNetwork
    ancillas: dict[int, AncillaStatus]

    def unmeasured(self) -> list[int]:
        return [v for v, st in sorted(self.ancillas.items()) if st.kind == "unmeasured"]


@dataclass(frozen=True)
class ResidualPhase:
    """Known local phase ``(W_v)^power`` left behind by a detachment."""

    vertex: int
    power: int
    word: dict[int, float]

    def cancel(self, reg: Register) -> Register:
        return apply_phase_word(reg, self.word, -self.power)

    def to_json(self) -> dict:
        return {"vertex": self.vertex, "power": self.power, "word": {str(k): v for k, v in self.word.items()}}


@dataclass(frozen=True, eq=False)
class AncillaBranch:
    outcomes: dict[int, int]
    register: Register
    probability: float


@dataclass(frozen=True, eq=False)
class PrepResult:
    outcomes: dict[int, int]
    corrections: list[tuple[int, int]]
    state: Register
    probability: float
    uncorrected: Optional[Register] = field(default=None, repr=False)


@dataclass(frozen=True)
class StabilizerReport:
    deviations: dict[int, float]
    support_ok: bool
    violations: list[tuple[int, ...]]

    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    def to_json(self) -> dict:
        return {
            "deviations": {str(k): v for k, v in self.deviations.items()},
            "support_ok": self.support_ok,
            "violations": [list(t) for t in self.violations[:16]],
        }


def stabilizer_word(g: DagNetwork, v: int) -> dict[int, float]:
    """Phase word of ``W_v``: ``+2pi/d(v)`` on ``v``, ``-2pi/d(v)`` on each child."""
    step = 2 * math.pi / g.dims[v]
    word = {v: step}
    for w in g.children(v):
        word[w] = -step
    return word


def build_prep_state(g: DagNetwork, psi: StateSpec) -> PrepState:
    dagmod.require_valid(g)
    inner = [v for v in g.vertices if not g.is_sink(v)]
    plus_main = make_state(SiteLayout(tuple(g.dims[v] for v in inner), tuple(inner)), "plus")
    plus_anc = make_state(
        SiteLayout(tuple(g.dims[v] for v in inner), tuple(ancilla(v) for v in inner)), "plus"
    )
    reg = tensor(plus_main, sink_register(g, psi), plus_anc)
    reg = reorder(reg, list(g.vertices) + [ancilla(v) for v in inner])
    for v in inner:
        reg = apply_controlled_phase_word(reg, ancilla(v), stabilizer_word(g, v))
    return PrepState(reg, g, {v: UNMEASURED for v in inner})


def measure_ancillas(
    prep: PrepState,
    *,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    outcomes: Optional[Mapping[int, int]] = None,
    max_branches: int = MAX_BRANCHES,
):
    """Fourier-measure every unmeasured ancilla.

    Returns one :class:`AncillaBranch` when sampling (``seed``/``rng``) or
    post-selecting (``outcomes``), otherwise the list of all branches.
    """
    todo = prep.unmeasured()
    if outcomes is not None:
        reg, prob = prep.register, 1.0
        for v in todo:
            br = measure_fourier(reg, ancilla(v), outcome=int(outcomes[v]))
            reg, prob = br.state, prob * br.probability
        return AncillaBranch({v: int(outcomes[v]) for v in todo}, reg, prob)
    if seed is not None or rng is not None:
        rng = rng if rng is not None else np.random.default_rng(seed)
        reg, prob, got = prep.register, 1.0, {}
        for v in todo:
            br = measure_fourier(reg, ancilla(v), rng=rng)
            reg, prob, got[v] = br.state, prob * br.probability, br.outcome
        return AncillaBranch(got, reg, prob)
    total = math.prod(prep.graph.dims[v] for v in todo)
    if total > max_branches:
        raise BranchExplosion(f"{total} ancilla branches exceed the cap of {max_branches}")
    out = []

    def walk(reg, i, got, prob):
        if i == len(todo):
            out.append(AncillaBranch(got, reg, prob))
            return
        v = todo[i]
        for br in fourier_branches(reg, ancilla(v)):
            walk(br.state, i + 1, {**got, v: br.outcome}, prob * br.probability)

    walk(prep.register, 0, {}, 1.0)
    return out


def correction_operator(g: DagNetwork, outcomes: Mapping[int, int]) -> list[tuple[int, int]]:
    """Shift powers that undo the outcome pattern ``outcomes``.

    An outcome ``s`` at ``x`` shifts ``x`` and every predecessor ``u`` by
    ``-n(u, x) * s``, with ``n(x, x) = 1``. Returned as ``(vertex, power)``
    pairs in ascending vertex order, zero powers omitted.
    """
    inner = {v for v in g.vertices if not g.is_sink(v)}
    unknown = set(outcomes) - inner
    if unknown:
        raise UnknownVertex(f"outcomes for non-ancilla vertices {sorted(unknown)}")
    missing = inner - set(outcomes)
    if missing:
        raise ValueError(f"missing outcomes for {sorted(missing)}")
    power = [0] * g.vertex_count
    for x, s in outcomes.items():
        if s == 0:
            continue
        n = dagmod.path_counts_to(g, x)
        n[x] = 1
        for u in g.vertices:
            power[u] -= n[u] * s
    return [(u, p % g.dims[u]) for u, p in enumerate(power) if p % g.dims[u]]


def apply_corrections(reg: Register, seq) -> Register:
    for v, p in seq:
        reg = apply_shift_power(reg, v, p)
    return reg


def _result(g: DagNetwork, br: AncillaBranch) -> PrepResult:
    seq = correction_operator(g, br.outcomes)
    return PrepResult(br.outcomes, seq, apply_corrections(br.register, seq), br.probability, br.register)


def finish_preparation(prep: PrepState, *, seed=None, rng=None, outcomes=None, max_branches=MAX_BRANCHES):
    """Measure the remaining ancillas and apply the feedforward shifts.

    The corrections are computed on ``prep.graph``, so detached vertices no
    longer constrain their former children.
    """
    got = measure_ancillas(prep, seed=seed, rng=rng, outcomes=outcomes, max_branches=max_branches)
    known = {v: st.outcome for v, st in prep.ancillas.items() if st.kind == "fourier"}
    if isinstance(got, AncillaBranch):
        return _result(prep.graph, replace(got, outcomes={**known, **got.outcomes}))
    return [_result(prep.graph, replace(b, outcomes={**known, **b.outcomes})) for b in got]


def prepare_resource(
    g: DagNetwork,
    psi: StateSpec = "plus",
    *,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    outcomes: Optional[Mapping[int, int]] = None,
    max_branches: int = MAX_BRANCHES,
):
    """Entangle, measure all ancillas once, correct once.

    Returns a single :class:`PrepResult` when sampling or post-selecting,
    otherwise one result per outcome pattern.
    """
    return finish_preparation(
        build_prep_state(g, psi), seed=seed, rng=rng, outcomes=outcomes, max_branches=max_branches
    )


def k_values(layout: SiteLayout, g: DagNetwork, v: int) -> np.ndarray:
    """``k_v - sum of children's digits`` for every basis state, full shape."""
    grid = layout.digit_grid(v)
    for w in g.children(v):
        grid = grid - layout.digit_grid(w)
    return np.broadcast_to(grid, layout.dims)


def check_stabilizers(reg: Register, g: DagNetwork, cutoff: float = 1e-12) -> StabilizerReport:
    """Deviation ``||W_v psi - psi||`` and support check ``K_v == 0`` per non-sink."""
    if tuple(reg.labels) != tuple(g.vertices) or reg.dims != g.dims:
        raise LayoutMismatch("register layout does not match the network")
    deviations = {}
    support = np.abs(reg.tensor) > cutoff
    bad = np.zeros(reg.dims, dtype=bool)
    for v in g.non_sinks():
        moved = apply_phase_word(reg, stabilizer_word(g, v))
        deviations[v] = float(np.linalg.norm(moved.amps - reg.amps))
        bad |= support & (k_values(reg.layout, g, v) != 0)
    violations = [tuple(int(x) for x in idx) for idx in zip(*np.nonzero(bad))]
    return StabilizerReport(deviations, not violations, violations)


def detach_vertex(
    prep: PrepState,
    v: int,
    *,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    outcome: Optional[int] = None,
) -> tuple[int, PrepState, ResidualPhase]:
    """Measure ``v'`` in the computational basis, cutting the edges leaving ``v``.

    The post-measurement state is ``(W_v)^l`` applied to the preparation
    state of the network without those edges; the returned
    :class:`ResidualPhase` records that known local phase.
    """
    status = prep.ancillas.get(v)
    if status is None:
        raise UnknownVertex(f"vertex {v} has no ancilla")
    if status.kind != "unmeasured":
        raise AncillaAlreadyMeasured(f"ancilla of {v} already measured ({status.kind})")
    if outcome is None and rng is None:
        rng = np.random.default_rng(seed)
    br = measure_computational(prep.register, ancilla(v), rng=rng, outcome=outcome)
    residual = ResidualPhase(v, br.outcome, stabilizer_word(prep.graph, v))
    ancillas = dict(prep.ancillas)
    ancillas[v] = AncillaStatus("computational", br.outcome)
    return br.outcome, PrepState(br.state, prep.graph.without_out_edges(v), ancillas), residual


def ghz_state(n: int) -> Register:
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = amps[-1] = 1
    return make_state(SiteLayout.of((2,) * n), amps)
