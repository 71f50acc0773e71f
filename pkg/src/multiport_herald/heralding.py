"""Photon-number detection: projection, herald probabilities and phases."""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fock import InvalidArgumentError, StateVector, FockState


class SupportMismatchError(ValueError):
    """A conditional state has a term outside the expected branch set."""

    def __init__(self, term: tuple, message: str | None = None):
        self.term = tuple(term)
        super().__init__(message or f"unexpected Fock term {FockState(term).ket()}")


@dataclass(frozen=True)
class Aggregate:
    """Exactly ``total`` photons, distributed in any way over ``modes``."""

    modes: frozenset
    total: int

    def __init__(self, modes: Iterable[int], total: int):
        object.__setattr__(self, "modes", frozenset(int(m) for m in modes))
        object.__setattr__(self, "total", int(total))
        if self.total < 0:
            raise InvalidArgumentError("aggregate total must be >= 0")


@dataclass(frozen=True)
class DetectionPattern:
    """Per-mode photon counts plus an optional aggregate constraint.

    Modes that are not mentioned are left undetected.
    """

    exact: Mapping[int, int] = field(default_factory=dict)
    aggregate: Aggregate | None = None

    def __post_init__(self):
        exact = {int(m): int(n) for m, n in dict(self.exact).items()}
        if any(n < 0 for n in exact.values()):
            raise InvalidArgumentError("negative detection count")
        object.__setattr__(self, "exact", exact)
        if self.aggregate is not None and self.aggregate.modes & exact.keys():
            raise InvalidArgumentError("exact and aggregate mode sets overlap")

    @property
    def detected_modes(self) -> list[int]:
        modes = set(self.exact)
        if self.aggregate is not None:
            modes |= self.aggregate.modes
        return sorted(modes)

    def admits(self, counts: Mapping[int, int]) -> bool:
        if any(counts[m] != n for m, n in self.exact.items()):
            return False
        if self.aggregate is not None:
            return sum(counts[m] for m in self.aggregate.modes) == self.aggregate.total
        return True


@dataclass(frozen=True)
class HeraldOutcome:
    pattern_instance: dict
    probability: float
    conditional_state: StateVector
    phases: tuple

    @property
    def magnitudes(self) -> tuple:
        return tuple(abs(a) for _, a in self.conditional_state.items())

    def to_dict(self) -> dict:
        return {
            "pattern_instance": {str(m): n for m, n in sorted(self.pattern_instance.items())},
            "probability": self.probability,
            "conditional_state": [
                {"occupations": list(k), "re": a.real, "im": a.imag}
                for k, a in self.conditional_state.items()
            ],
            "phases": list(self.phases),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def term_phases(state: StateVector) -> tuple:
    """Arguments of the lexicographically ordered terms, the first gauged to 0."""
    terms = state.terms
    keys = sorted(terms)
    if not keys:
        return ()
    ref = cmath.phase(terms[keys[0]])
    return tuple(_wrap(cmath.phase(terms[k]) - ref) for k in keys)


def _wrap(phi: float) -> float:
    # map into (-pi, pi], keeping a sign flip at +pi
    phi = math.remainder(phi, 2 * math.pi)
    if phi <= -math.pi + 1e-12:
        phi += 2 * math.pi
    return 0.0 if abs(phi) < 1e-12 else phi


def _outcome(instance: dict, terms: dict, mode_count: int) -> HeraldOutcome:
    cond = StateVector._trusted(mode_count, terms)
    prob = cond.norm() ** 2
    cond = cond.normalized()
    return HeraldOutcome(instance, prob, cond, term_phases(cond))


def project(state: StateVector, pattern: DetectionPattern) -> list[HeraldOutcome]:
    """One outcome per concrete detection instance with support in ``state``.

    Detected modes are removed from the conditional states; the surviving
    modes keep their relative order, and detecting every mode leaves a
    zero-mode state. Outcomes are sorted by instance.
    """
    detected = pattern.detected_modes
    if any(m < 0 or m >= state.mode_count for m in detected):
        raise InvalidArgumentError(f"pattern modes {detected} outside the state")
    kept = [m for m in range(state.mode_count) if m not in set(detected)]
    if not detected:
        return [HeraldOutcome({}, state.norm() ** 2, state.normalized(),
                              term_phases(state.normalized()))]
    groups: dict[tuple, dict] = {}
    for key, amp in state.terms.items():
        counts = tuple(key[m] for m in detected)
        if not pattern.admits(dict(zip(detected, counts))):
            continue
        groups.setdefault(counts, {})[tuple(key[m] for m in kept)] = amp
    return [_outcome(dict(zip(detected, counts)), groups[counts], len(kept))
            for counts in sorted(groups)]


def herald_probability(state: StateVector, pattern: DetectionPattern) -> float:
    return sum(o.probability for o in project(state, pattern))


def extract_phases(outcome: HeraldOutcome, support: Sequence[tuple] | None = None) -> np.ndarray:
    """Relative phases of the conditional-state terms after the first.

    With ``support`` given, terms are read in that order and any term of the
    state outside it raises :class:`SupportMismatchError`.
    """
    state = outcome.conditional_state
    if support is None:
        amps = [a for _, a in state.items()]
    else:
        allowed = {tuple(s) for s in support}
        for key in state:
            if key not in allowed:
                raise SupportMismatchError(key)
        amps = [state[s] for s in support]
    if len(amps) < 2:
        return np.zeros(0)
    ref = cmath.phase(amps[0])
    return np.array([_wrap(cmath.phase(a) - ref) for a in amps[1:]])


def equal_weights_check(outcome: HeraldOutcome, tol: float = 1e-9) -> bool:
    mags = outcome.magnitudes
    if not mags:
        return False
    return max(mags) - min(mags) <= tol
