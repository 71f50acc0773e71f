"""Fock basis states, composite mode indexing and sparse state vectors."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

#: Terms whose amplitude magnitude falls below this are dropped.
PRUNE_THRESHOLD = 1e-12
#: Tolerance used when checking that a state is normalized.
NORM_TOL = 1e-9


class InvalidArgumentError(ValueError):
    """Raised when an operation receives arguments outside its domain."""


@dataclass(frozen=True, order=True)
class ModeIndex:
    """A composite mode: a spatial mode carrying one internal label."""

    spatial: int
    internal: int = 0

    def flatten(self, d_int: int) -> int:
        if self.spatial < 0 or not 0 <= self.internal < d_int:
            raise InvalidArgumentError(f"{self} is not valid for d_int={d_int}")
        return self.spatial * d_int + self.internal

    @classmethod
    def unflatten(cls, index: int, d_int: int) -> "ModeIndex":
        if index < 0 or d_int < 1:
            raise InvalidArgumentError(f"cannot unflatten {index} with d_int={d_int}")
        spatial, internal = divmod(index, d_int)
        return cls(spatial, internal)


@dataclass(frozen=True)
class ModeLayout:
    """``spatial`` spatial modes, each split into ``d_int`` internal labels."""

    spatial: int
    d_int: int = 1

    def __post_init__(self):
        if self.spatial < 1 or self.d_int < 1:
            raise InvalidArgumentError(f"invalid layout {self.spatial}x{self.d_int}")

    @property
    def mode_count(self) -> int:
        return self.spatial * self.d_int

    def index(self, spatial: int, internal: int = 0) -> int:
        if spatial >= self.spatial:
            raise InvalidArgumentError(f"spatial mode {spatial} outside layout")
        return ModeIndex(spatial, internal).flatten(self.d_int)

    def mode(self, index: int) -> ModeIndex:
        if not 0 <= index < self.mode_count:
            raise InvalidArgumentError(f"mode {index} outside layout")
        return ModeIndex.unflatten(index, self.d_int)


class FockState(tuple):
    """Occupation numbers, one per flattened mode.

    Hashes and compares like the plain tuple, so either can key a
    :class:`StateVector`.
    """

    def __new__(cls, occupations: Iterable[int] = ()):
        occ = tuple(int(n) for n in occupations)
        if any(n < 0 for n in occ):
            raise InvalidArgumentError(f"negative occupation in {occ}")
        return super().__new__(cls, occ)

    @property
    def total_photons(self) -> int:
        return sum(self)

    @property
    def mode_count(self) -> int:
        return len(self)

    def ket(self) -> str:
        return "|" + ",".join(map(str, self)) + "⟩"

    def __repr__(self) -> str:
        return self.ket()


class StateVector:
    """Sparse pure state: a map from occupation tuples to complex amplitudes.

    Instances are treated as immutable. Amplitudes smaller than
    :data:`PRUNE_THRESHOLD` are dropped at construction.
    """

    __slots__ = ("_mode_count", "_terms", "_norm")

    def __init__(self, mode_count: int, terms: Mapping[tuple, complex] | None = None,
                 *, prune: float = PRUNE_THRESHOLD):
        if mode_count < 0:
            raise InvalidArgumentError("mode_count must be >= 0")
        clean: dict[tuple, complex] = {}
        for key, amp in (terms or {}).items():
            key = tuple(key)
            if len(key) != mode_count:
                raise InvalidArgumentError(
                    f"term {key} has {len(key)} modes, expected {mode_count}")
            amp = complex(amp)
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise InvalidArgumentError(f"non-finite amplitude for {key}")
            if abs(amp) >= prune:
                clean[key] = amp
        self._mode_count = mode_count
        self._terms = clean
        self._norm: float | None = None

    @classmethod
    def _trusted(cls, mode_count: int, terms: dict) -> "StateVector":
        # bypasses validation; callers guarantee key lengths and pruning
        obj = cls.__new__(cls)
        obj._mode_count = mode_count
        obj._terms = terms
        obj._norm = None
        return obj

    @property
    def mode_count(self) -> int:
        return self._mode_count

    @property
    def terms(self) -> Mapping[tuple, complex]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple]:
        return iter(sorted(self._terms))

    def __getitem__(self, key) -> complex:
        return self._terms.get(tuple(key), 0j)

    def __contains__(self, key) -> bool:
        return tuple(key) in self._terms

    def items(self) -> list[tuple[FockState, complex]]:
        """Terms in lexicographic order of occupations."""
        new = tuple.__new__
        return [(new(FockState, k), self._terms[k]) for k in sorted(self._terms)]

    def is_zero(self) -> bool:
        return not self._terms

    def photon_numbers(self) -> set[int]:
        return {sum(k) for k in self._terms}

    def norm(self) -> float:
        if self._norm is None:
            self._norm = math.sqrt(sum(abs(a) ** 2 for a in self._terms.values()))
        return self._norm

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            return self
        return StateVector(self._mode_count, {k: a / n for k, a in self._terms.items()})

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self._mode_count, {k: a * factor for k, a in self._terms.items()})

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same_modes(self, other)
        out = dict(self._terms)
        for k, a in other._terms.items():
            out[k] = out.get(k, 0j) + a
        return StateVector(self._mode_count, out)

    def tensor(self, other: "StateVector") -> "StateVector":
        """Product state with ``other``'s modes appended after ours."""
        out = {ka + kb: a * b for ka, a in self._terms.items() for kb, b in other._terms.items()}
        return StateVector(self._mode_count + other._mode_count, out)

    def allclose(self, other: "StateVector", tol: float = NORM_TOL) -> bool:
        if self._mode_count != other._mode_count:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self[k] - other[k]) <= tol for k in keys)

    def to_text(self, digits: int = 12) -> str:
        """Canonical serialization, one ``|n1,...,nM⟩ : re,im`` line per term."""
        lines = []
        for key, amp in self.items():
            re_, im_ = (_snap(x) for x in (amp.real, amp.imag))
            lines.append(f"{key.ket()} : {re_:.{digits}g},{im_:.{digits}g}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str, mode_count: int | None = None) -> "StateVector":
        terms: dict[tuple, complex] = {}
        for line in text.strip().splitlines():
            m = _TERM_LINE.match(line.strip())
            if m is None:
                raise InvalidArgumentError(f"cannot parse term line {line!r}")
            key = tuple(int(x) for x in m.group(1).split(","))
            terms[key] = complex(float(m.group(2)), float(m.group(3)))
        if mode_count is None:
            if not terms:
                raise InvalidArgumentError("mode_count required for an empty state")
            mode_count = len(next(iter(terms)))
        return cls(mode_count, terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self._mode_count == other._mode_count and self._terms == other._terms

    __hash__ = None

    def __repr__(self) -> str:
        body = " + ".join(f"({a:.6g}){FockState(k).ket()}" for k, a in
                          ((k, self._terms[k]) for k in sorted(self._terms)))
        return f"StateVector({self._mode_count}, {body or '0'})"


def _snap(x: float) -> float:
    # round-off below the prune threshold would make golden files platform-dependent
    return 0.0 if abs(x) < PRUNE_THRESHOLD else x


_TERM_LINE = re.compile(r"^\|([0-9,]+)⟩\s*:\s*([^,]+),(.+)$")


def _check_same_modes(a: StateVector, b: StateVector) -> None:
    if a.mode_count != b.mode_count:
        raise InvalidArgumentError(f"mode-count mismatch: {a.mode_count} vs {b.mode_count}")


def vacuum(mode_count: int) -> StateVector:
    if mode_count < 1:
        raise InvalidArgumentError("vacuum needs at least one mode")
    return StateVector(mode_count, {(0,) * mode_count: 1.0})


def product_input(occupations: Iterable[int]) -> StateVector:
    """Normalized number state ``|n1, n2, ...⟩``."""
    occ = FockState(occupations)
    return StateVector(len(occ), {tuple(occ): 1.0})


def zero_state(mode_count: int) -> StateVector:
    return StateVector(mode_count, {})


def norm(state: StateVector) -> float:
    return state.norm()


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``⟨a|b⟩``."""
    _check_same_modes(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for key in small.terms:
        if key in large.terms:
            total += a.terms[key].conjugate() * b.terms[key]
    return total
