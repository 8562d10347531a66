"""Dense state vectors over qudits of mixed dimensions.

Sites are addressed by label (vertex ids, ancilla names, ...), never by
position, so that removing a measured site does not invalidate references to
the remaining ones. Site 0 of a layout is the slowest-varying digit of the
flat index.

All gate functions return a new :class:`Register`; inputs are not mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    ControlInWord,
    DimensionMismatch,
    InvalidSite,
    LayoutMismatch,
    SameSite,
    ZeroProbabilityBranchRequested,
    ZeroVector,
)

PRUNE = 1e-14
DUMP_CUTOFF = 1e-12


@dataclass(frozen=True)
class SiteLayout:
    dims: tuple[int, ...]
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.dims) != len(self.labels):
            raise DimensionMismatch("one label per site required")
        if any(d < 2 for d in self.dims):
            raise DimensionMismatch(f"site dimensions must be >= 2, got {self.dims}")
        if len(set(self.labels)) != len(self.labels):
            raise DimensionMismatch("site labels must be unique")

    @classmethod
    def of(cls, dims: Sequence[int], labels: Optional[Sequence[Hashable]] = None):
        return cls(tuple(dims), tuple(range(len(dims))) if labels is None else tuple(labels))

    @property
    def size(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for d in reversed(self.dims):
            out.append(acc)
            acc *= d
        return tuple(reversed(out))

    def index(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidSite(label) from None

    def dim(self, label: Hashable) -> int:
        return self.dims[self.index(label)]

    def flat_index(self, digits: Sequence[int]) -> int:
        return int(sum(k * s for k, s in zip(digits, self.strides)))

    def digits(self, flat: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(flat, self.dims)) if self.dims else ()

    def without(self, label: Hashable) -> "SiteLayout":
        i = self.index(label)
        return SiteLayout(self.dims[:i] + self.dims[i + 1 :], self.labels[:i] + self.labels[i + 1 :])

    def digit_grid(self, label: Hashable) -> np.ndarray:
        """Digit of site ``label`` for every basis state, shaped for broadcasting."""
        i = self.index(label)
        shape = [1] * len(self.dims)
        shape[i] = self.dims[i]
        return np.arange(self.dims[i]).reshape(shape)


@dataclass(frozen=True, eq=False)
class Register:
    layout: SiteLayout
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        if amps.size != self.layout.size:
            raise DimensionMismatch(f"expected {self.layout.size} amplitudes, got {amps.size}")
        object.__setattr__(self, "amps", amps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    @property
    def labels(self) -> tuple[Hashable, ...]:
        return self.layout.labels

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "Register":
        n = self.norm()
        if n == 0:
            raise ZeroVector("cannot normalize the zero vector")
        return Register(self.layout, self.amps / n)

    def _with(self, tensor: np.ndarray) -> "Register":
        return Register(self.layout, tensor.reshape(-1))

    def dump(self, cutoff: float = DUMP_CUTOFF) -> list:
        """``[digits, re, im]`` triples for every amplitude above ``cutoff``."""
        out = []
        for flat in np.flatnonzero(np.abs(self.amps) >= cutoff):
            a = self.amps[flat]
            out.append([list(self.layout.digits(int(flat))), float(a.real), float(a.imag)])
        return out


@dataclass(frozen=True, eq=False)
class Branch:
    outcome: int
    probability: float
    state: Register


StateSpec = Union[str, Sequence, np.ndarray, Register]


def _plus(d: int) -> np.ndarray:
    return np.full(d, 1 / np.sqrt(d), dtype=np.complex128)


def _basis(d: int, k: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[k % d] = 1
    return v


_PRESETS = {"zero": lambda d: _basis(d, 0), "plus": _plus}


def make_state(layout: SiteLayout, spec: StateSpec) -> Register:
    """Build a normalized register.

    ``spec`` is a preset name applied to every site (``"zero"``/``"plus"``),
    a per-site list of preset names, a digit tuple, or an explicit amplitude
    vector of length ``layout.size``.
    """
    if isinstance(spec, Register):
        if spec.layout.dims != layout.dims:
            raise DimensionMismatch(f"state dims {spec.dims} do not match {layout.dims}")
        return Register(layout, spec.amps).normalized()
    if isinstance(spec, str):
        spec = [spec] * len(layout.dims)
    if not isinstance(spec, np.ndarray) and len(spec) == len(layout.dims) and all(
        isinstance(x, (str, int, np.integer)) for x in spec
    ):
        factors = []
        for d, x in zip(layout.dims, spec):
            if isinstance(x, str):
                if x not in _PRESETS:
                    raise ValueError(f"unknown preset {x!r}")
                factors.append(_PRESETS[x](d))
            else:
                if not 0 <= x < d:
                    raise DimensionMismatch(f"digit {x} out of range for dimension {d}")
                factors.append(_basis(d, int(x)))
        amps = np.ones(1, dtype=np.complex128)
        for f in factors:
            amps = np.kron(amps, f)
        return Register(layout, amps)
    amps = np.asarray(spec, dtype=np.complex128).reshape(-1)
    if amps.size != layout.size:
        raise DimensionMismatch(f"expected {layout.size} amplitudes, got {amps.size}")
    if not np.any(amps):
        raise ZeroVector("explicit amplitudes are all zero")
    return Register(layout, amps).normalized()


def tensor(*regs: Register) -> Register:
    """Tensor product; sites keep their order, earlier registers are slower."""
    dims, labels = [], []
    amps = np.ones(1, dtype=np.complex128)
    for r in regs:
        dims += r.dims
        labels += r.labels
        amps = np.kron(amps, r.amps)
    return Register(SiteLayout(tuple(dims), tuple(labels)), amps)


def reorder(reg: Register, labels: Sequence[Hashable]) -> Register:
    """Same state with sites permuted into the order ``labels``."""
    perm = [reg.layout.index(x) for x in labels]
    if len(perm) != len(reg.labels):
        raise LayoutMismatch("reorder must list every site exactly once")
    layout = SiteLayout(tuple(reg.dims[i] for i in perm), tuple(labels))
    return Register(layout, np.transpose(reg.tensor, perm).reshape(-1))


def relabel(reg: Register, mapping: Mapping[Hashable, Hashable]) -> Register:
    labels = tuple(mapping.get(x, x) for x in reg.labels)
    return Register(SiteLayout(reg.dims, labels), reg.amps)


# gates


def apply_shift_power(reg: Register, site: Hashable, power: int = 1) -> Register:
    """``X^power`` on ``site``: digit ``k`` becomes ``k + power mod d``."""
    i = reg.layout.index(site)
    power = int(power) % reg.dims[i]
    if power == 0:
        return Register(reg.layout, reg.amps.copy())
    return reg._with(np.roll(reg.tensor, power, axis=i))


def apply_local_phase(reg: Register, site: Hashable, theta: float) -> Register:
    """``U(theta)`` on ``site``: multiplies digit ``k`` by ``exp(i k theta)``."""
    grid = reg.layout.digit_grid(site)
    return reg._with(reg.tensor * np.exp(1j * theta * grid))


def apply_controlled_shift(reg: Register, control: Hashable, target: Hashable) -> Register:
    """Shift ``target`` by the digit of ``control`` (modulo the target dimension)."""
    if control == target:
        raise SameSite(control)
    b = reg.layout.index(control)
    a = reg.layout.index(target)
    t = reg.tensor
    out = np.empty_like(t)
    idx = [slice(None)] * t.ndim
    for k in range(reg.dims[b]):
        idx[b] = k
        sl = tuple(idx)
        # after fixing axis b the target axis index drops by one if it came later
        out[sl] = np.roll(t[sl], k, axis=a - (a > b))
    return reg._with(out)


def phase_word_exponent(layout: SiteLayout, word: Mapping[Hashable, float]) -> np.ndarray:
    """``sum_t k_t * theta_t`` over the sites of ``word``, as a broadcastable grid."""
    total = np.zeros([1] * len(layout.dims))
    for site, theta in word.items():
        total = total + theta * layout.digit_grid(site)
    return total


def apply_phase_word(reg: Register, word: Mapping[Hashable, float], power: float = 1) -> Register:
    """Uncontrolled product of ``U_t(power * theta_t)`` over the word."""
    expo = phase_word_exponent(reg.layout, word)
    return reg._with(reg.tensor * np.exp(1j * power * expo))


def apply_controlled_phase_word(
    reg: Register, control: Hashable, word: Mapping[Hashable, float]
) -> Register:
    """Diagonal gate ``sum_l |l><l|_control (prod_t U_t(theta_t))^l``."""
    if control in word:
        raise ControlInWord(control)
    ell = reg.layout.digit_grid(control)
    expo = phase_word_exponent(reg.layout, word)
    return reg._with(reg.tensor * np.exp(1j * ell * expo))


# measurements


def fourier_vector(d: int, s: int) -> np.ndarray:
    """``Z^s |+>`` in dimension ``d``."""
    return np.exp(2j * np.pi * s * np.arange(d) / d) / np.sqrt(d)


def _project(reg: Register, site: Hashable, bra: np.ndarray) -> tuple[float, Register]:
    i = reg.layout.index(site)
    rest = np.tensordot(bra.conj(), reg.tensor, axes=([0], [i]))
    layout = reg.layout.without(site)
    p = float(np.vdot(rest, rest).real)
    return p, Register(layout, rest.reshape(-1))


def _branches(reg: Register, site: Hashable, basis) -> list[Branch]:
    d = reg.layout.dim(site)
    out = []
    for s in range(d):
        p, post = _project(reg, site, basis(d, s))
        if p >= PRUNE:
            out.append(Branch(s, p, Register(post.layout, post.amps / np.sqrt(p))))
    return out


def _measure(reg, site, basis, rng, outcome) -> Branch:
    branches = _branches(reg, site, basis)
    if outcome is not None:
        for b in branches:
            if b.outcome == outcome:
                return b
        raise ZeroProbabilityBranchRequested(f"outcome {outcome} on {site!r} has probability 0")
    if rng is None:
        raise ValueError("sampling requires a random generator")
    probs = np.array([b.probability for b in branches])
    return branches[int(rng.choice(len(branches), p=probs / probs.sum()))]


def fourier_branches(reg: Register, site: Hashable) -> list[Branch]:
    """Every nonzero outcome of a measurement in the ``{Z^s|+>}`` basis."""
    return _branches(reg, site, fourier_vector)


def computational_branches(reg: Register, site: Hashable) -> list[Branch]:
    return _branches(reg, site, _basis)


def measure_fourier(
    reg: Register,
    site: Hashable,
    rng: Optional[np.random.Generator] = None,
    outcome: Optional[int] = None,
) -> Branch:
    """Measure ``site`` in the Fourier basis and remove it from the register.

    Either draws the outcome with ``rng`` or post-selects ``outcome``.
    """
    return _measure(reg, site, fourier_vector, rng, outcome)


def measure_computational(
    reg: Register,
    site: Hashable,
    rng: Optional[np.random.Generator] = None,
    outcome: Optional[int] = None,
) -> Branch:
    return _measure(reg, site, _basis, rng, outcome)


def overlap(a: Register, b: Register) -> complex:
    if a.layout != b.layout:
        raise LayoutMismatch(f"{a.layout} vs {b.layout}")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: Register, b: Register) -> float:
    """``|<a|b>|``, insensitive to global phase."""
    return min(1.0, abs(overlap(a, b)))
