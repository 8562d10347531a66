"""Dense-matrix ground truth for the qudit identities and resource states.

Nothing here calls into :mod:`gatecast.qudit`; operators are assembled from
explicit Kronecker products and index loops so that agreement with the
streaming engine is independent evidence.
"""

from __future__ import annotations

import itertools
import math
from functools import reduce
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .dag import DagNetwork
from .errors import DimensionTooLarge

MAX_DENSE = 4096
THETA_GRID = (0.0, 0.7, math.pi, 2.1)


def shift(d: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        m[(k + 1) % d, k] = 1
    return m


def clock(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def phase(d: int, theta: float) -> np.ndarray:
    return np.diag(np.exp(1j * theta * np.arange(d)))


def ket(d: int, k: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[k] = 1
    return v


def plus(d: int) -> np.ndarray:
    return np.full(d, 1 / math.sqrt(d), dtype=np.complex128)


def fourier_ket(d: int, s: int) -> np.ndarray:
    return np.linalg.matrix_power(clock(d), s) @ plus(d)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    """Kronecker product of matrices or of vectors (vectors stay 1-D)."""
    mats = list(mats)
    if not mats:
        return np.eye(1, dtype=np.complex128)
    return reduce(np.kron, mats).astype(np.complex128)


def _check_size(total: int):
    if total > MAX_DENSE:
        raise DimensionTooLarge(f"dense dimension {total} exceeds {MAX_DENSE}")


def embed(dims: Sequence[int], ops: Mapping[int, np.ndarray]) -> np.ndarray:
    """Tensor product of ``ops`` on their sites and identities elsewhere."""
    _check_size(math.prod(dims))
    return kron_all(ops.get(i, np.eye(d)) for i, d in enumerate(dims))


def controlled_shift(dims: Sequence[int], control: int, target: int) -> np.ndarray:
    """``sum_k |k><k|_control (X_target)^k`` on the full space."""
    dc, dt = dims[control], dims[target]
    return sum(
        embed(dims, {control: np.outer(ket(dc, k), ket(dc, k)), target: np.linalg.matrix_power(shift(dt), k)})
        for k in range(dc)
    )


def controlled_phase_word(dims: Sequence[int], control: int, word: Mapping[int, float]) -> np.ndarray:
    """Diagonal ``exp(i l sum_t k_t theta_t)`` built by enumerating basis states."""
    _check_size(math.prod(dims))
    diag = []
    for digits in itertools.product(*(range(d) for d in dims)):
        expo = digits[control] * sum(digits[t] * th for t, th in word.items())
        diag.append(np.exp(1j * expo))
    return np.diag(np.array(diag))


def gate_matrix(dims: Sequence[int], gate: tuple) -> np.ndarray:
    """Dense matrix of a gate tuple; sites are positions in ``dims``.

    Gate tuples: ``("shift", site, power)``, ``("phase", site, theta)``,
    ``("cshift", control, target)``, ``("cword", control, {site: theta})``.
    """
    kind = gate[0]
    if kind == "shift":
        return embed(dims, {gate[1]: np.linalg.matrix_power(shift(dims[gate[1]]), gate[2] % dims[gate[1]])})
    if kind == "phase":
        return embed(dims, {gate[1]: phase(dims[gate[1]], gate[2])})
    if kind == "cshift":
        return controlled_shift(dims, gate[1], gate[2])
    if kind == "cword":
        return controlled_phase_word(dims, gate[1], gate[2])
    raise ValueError(f"unknown gate {kind!r}")


def random_gates(rng: np.random.Generator, dims: Sequence[int], length: int) -> list[tuple]:
    n = len(dims)
    kinds = ["shift", "phase"] + (["cshift", "cword"] if n > 1 else [])
    out = []
    for _ in range(length):
        kind = kinds[int(rng.integers(len(kinds)))]
        a = int(rng.integers(n))
        if kind == "shift":
            out.append((kind, a, int(rng.integers(-7, 8))))
        elif kind == "phase":
            out.append((kind, a, float(rng.uniform(-np.pi, np.pi))))
        else:
            b = int(rng.choice([i for i in range(n) if i != a]))
            if kind == "cshift":
                out.append((kind, a, b))
            else:
                others = [i for i in range(n) if i != a]
                k = int(rng.integers(1, len(others) + 1))
                sites = rng.choice(others, size=k, replace=False)
                out.append((kind, a, {int(t): float(rng.uniform(-np.pi, np.pi)) for t in sites}))
    return out


def random_layout(rng: np.random.Generator, max_total: int = 256, max_dim: int = 7) -> tuple[int, ...]:
    while True:
        n = int(rng.integers(1, 5))
        dims = tuple(int(x) for x in rng.integers(2, max_dim + 1, size=n))
        if math.prod(dims) <= max_total:
            return dims


def max_dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


# identities


def verify_unitarity(d: int, theta: float = 0.7) -> float:
    """Worst ``|M M^dag - I|`` over X, Z, U(theta) and CX with a ``d``-level target."""
    mats = [shift(d), clock(d), phase(d, theta)]
    for dc in range(2, d + 1):
        mats.append(controlled_shift((dc, d), 0, 1))
    return max(max_dev(m @ m.conj().T, np.eye(len(m))) for m in mats)


def verify_measurement_bases(d: int) -> float:
    """Both projector families must be orthogonal and resolve the identity."""
    worst = 0.0
    for vecs in ([ket(d, k) for k in range(d)], [fourier_ket(d, s) for s in range(d)]):
        projs = [np.outer(v, v.conj()) for v in vecs]
        worst = max(worst, max_dev(sum(projs), np.eye(d)))
        for i, p in enumerate(projs):
            for j, q in enumerate(projs):
                worst = max(worst, max_dev(p @ q, p if i == j else np.zeros_like(p)))
    return worst


def verify_commutation_identity(
    d_j: int,
    D: int,
    theta: Optional[float] = None,
    ell: Optional[int] = None,
    domain: str = "full",
) -> float:
    """Max entry difference between the two sides of the phase/CX exchange rule.

    With ``theta``: ``(I x U_A(theta)) CX == CX (U_j(theta) x U_A(theta))``.
    With ``ell``: ``(I x Z_A^l) CX == CX (U_j(2 pi l / D) x Z_A^l)``.
    ``domain="full"`` compares every column; ``domain="reachable"`` only the
    inputs ``|k>_j |m>_A`` with ``k + m < D``, where the shift never wraps.
    """
    if not 2 <= d_j <= D:
        raise ValueError(f"need 2 <= d_j <= D, got d_j={d_j}, D={D}")
    if D > 16:
        raise DimensionTooLarge(f"D={D} exceeds 16")
    if (theta is None) == (ell is None):
        raise ValueError("give exactly one of theta or ell")
    cx = controlled_shift((d_j, D), 0, 1)
    if ell is not None:
        za = np.linalg.matrix_power(clock(D), ell)
        lhs = np.kron(np.eye(d_j), za) @ cx
        rhs = cx @ np.kron(phase(d_j, 2 * math.pi * ell / D), za)
    else:
        lhs = np.kron(np.eye(d_j), phase(D, theta)) @ cx
        rhs = cx @ np.kron(phase(d_j, theta), phase(D, theta))
    if domain == "reachable":
        cols = [k * D + m for k in range(d_j) for m in range(D) if k + m < D]
        lhs, rhs = lhs[:, cols], rhs[:, cols]
    elif domain != "full":
        raise ValueError(f"unknown domain {domain!r}")
    return max_dev(lhs, rhs)


def splitting_map(dims: Sequence[int], theta: float, s: int) -> np.ndarray:
    """``<s~|_A U_A(theta) prod_j CX_{j=>A} |0>_A`` as a matrix on the receivers."""
    D = 1 + sum(d - 1 for d in dims)
    full = tuple(dims) + (D,)
    a = len(dims)
    cx = reduce(lambda m, j: controlled_shift(full, j, a) @ m, range(len(dims)), np.eye(math.prod(full)))
    p = math.prod(dims)
    iso = np.kron(np.eye(p), ket(D, 0)[:, None])
    bra = np.kron(np.eye(p), fourier_ket(D, s).conj()[None, :])
    return bra @ embed(full, {a: phase(D, theta)}) @ cx @ iso


def verify_splitting_identity(dims: Sequence[int], theta: float, s: int) -> float:
    """Max difference between the contracted sender map and ``D^-1/2 (x) U_j(theta - 2 pi s / D)``."""
    D = 1 + sum(d - 1 for d in dims)
    if D > 64:
        raise DimensionTooLarge(f"D={D} exceeds 64")
    rhs = kron_all(phase(d, theta - 2 * math.pi * s / D) for d in dims) / math.sqrt(D)
    return max_dev(splitting_map(dims, theta, s), rhs)


def verify_projector_identity(d_v: int, child_dims: Sequence[int]) -> float:
    """``<+|_{v'} CW |+>_{v'}`` against ``(1/d) sum_l W^l``, plus idempotence."""
    dims = (d_v, d_v) + tuple(child_dims)  # ancilla, v, children
    word = {1: 2 * math.pi / d_v}
    word.update({2 + i: -2 * math.pi / d_v for i in range(len(child_dims))})
    cw = controlled_phase_word(dims, 0, word)
    rest = math.prod(dims[1:])
    iso = np.kron(plus(d_v)[:, None], np.eye(rest))
    lhs = iso.conj().T @ cw @ iso
    w = np.diag([
        np.exp(2j * np.pi * (ks[0] - sum(ks[1:])) / d_v)
        for ks in itertools.product(*(range(d) for d in dims[1:]))
    ])
    proj = sum(np.linalg.matrix_power(w, ell) for ell in range(d_v)) / d_v
    return max(max_dev(lhs, proj), max_dev(proj @ proj, proj))


# resource-state checks


def support_violations(g: DagNetwork, amps: np.ndarray, cutoff: float = 1e-12) -> list[tuple[int, ...]]:
    """Basis tuples with non-negligible amplitude that break ``K_v = 0``."""
    _check_size(math.prod(g.dims))
    amps = np.asarray(amps).reshape(-1)
    inner = [v for v in g.vertices if g.children(v)]
    bad = []
    for flat, digits in enumerate(itertools.product(*(range(d) for d in g.dims))):
        if abs(amps[flat]) <= cutoff:
            continue
        if any(digits[v] != sum(digits[w] for w in g.children(v)) for v in inner):
            bad.append(digits)
    return bad


def verify_support_condition(g: DagNetwork, psi="plus", state=None) -> list[tuple[int, ...]]:
    """Empty list when every amplitude of the resource state satisfies ``K_v = 0``.

    ``state`` (amplitudes or a register) overrides the freshly built
    resource state, e.g. for negative controls.
    """
    if state is None:
        from .broadcast import build_resource_state

        state = build_resource_state(g, psi)
    return support_violations(g, getattr(state, "amps", state))


def dense_resource_state(g: DagNetwork, sink_amps: np.ndarray) -> np.ndarray:
    """Resource state assembled from dense CX matrices, sinks in ascending id order."""
    dims = g.dims
    _check_size(math.prod(dims))
    sinks = [v for v in g.vertices if not g.children(v)]
    sink_dims = [dims[v] for v in sinks]
    sink_amps = np.asarray(sink_amps, dtype=np.complex128).reshape(-1)
    sink_amps = sink_amps / np.linalg.norm(sink_amps)
    state = np.zeros(math.prod(dims), dtype=np.complex128)
    strides = [math.prod(dims[i + 1 :]) for i in range(len(dims))]
    for flat, ks in enumerate(itertools.product(*(range(d) for d in sink_dims))):
        state[sum(k * strides[v] for v, k in zip(sinks, ks))] = sink_amps[flat]
    # children are always entangled before their parents
    for v in _reverse_topological(g):
        for w in g.children(v):
            state = controlled_shift(dims, w, v) @ state
    return state


def _reverse_topological(g: DagNetwork) -> list[int]:
    done: list[int] = []
    seen: set[int] = set()

    def visit(v):
        if v in seen:
            return
        seen.add(v)
        for w in g.children(v):
            visit(w)
        done.append(v)

    for v in g.vertices:
        visit(v)
    return done


def run_props(dmax: int = 7) -> dict[str, dict]:
    """Deterministic sweeps over every identity; one entry per check."""
    checks: dict[str, dict] = {}

    def record(name, devs):
        worst = max(devs) if devs else 0.0
        checks[name] = {"max_deviation": worst, "points": len(devs), "passed": worst <= 1e-12}

    ds = range(2, dmax + 1)
    record("unitarity", [verify_unitarity(d, th) for d in ds for th in THETA_GRID])
    record("measurement_bases", [verify_measurement_bases(d) for d in ds])
    pairs = [(dj, D) for D in ds for dj in range(2, D + 1)]
    record("commutation_theta_full", [verify_commutation_identity(dj, D, theta=th) for dj, D in pairs for th in THETA_GRID])
    record(
        "commutation_theta_reachable",
        [verify_commutation_identity(dj, D, theta=th, domain="reachable") for dj, D in pairs for th in THETA_GRID],
    )
    record("commutation_zpower", [verify_commutation_identity(dj, D, ell=l) for dj, D in pairs for l in range(D)])
    split = []
    for n in range(1, 4):
        for dims in itertools.product(range(2, min(3, dmax) + 1), repeat=n):
            D = 1 + sum(d - 1 for d in dims)
            split += [verify_splitting_identity(dims, th, s) for th in THETA_GRID for s in range(D)]
    record("splitting", split)
    proj = []
    for d in ds:
        # child dimension patterns consistent with the recursion, capped for size
        for kids in _child_patterns(d - 1, max_children=2):
            proj.append(verify_projector_identity(d, kids))
    record("projector", proj)
    return checks


def _child_patterns(budget: int, max_children: int) -> list[tuple[int, ...]]:
    out = []
    for k in range(1, max_children + 1):
        for parts in itertools.combinations_with_replacement(range(1, budget + 1), k):
            if sum(parts) == budget:
                out.append(tuple(p + 1 for p in parts))
    return out
