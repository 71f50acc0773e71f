"""Scheme compiler for multiport heralding setups.

Every connected scheme is run in factored form: each splitter block is
evolved on its own, its output is split into sectors by the photon number
in its heralding mode, and only the heralding modes pass through the
connecting D-port splitter. Blocks act on disjoint modes, so this is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .evolution import _evolve_terms, apply, apply_on_modes, subtract_photon, transition_amplitude
from .fock import PRUNE_THRESHOLD, ModeLayout, StateVector, inner_product, product_input
from .heralding import DetectionPattern, HeraldOutcome, project, term_phases
from .interferometer import compose, dft_unitary, on_internal_labels, phase_shift

#: Largest connector output space enumerated outcome by outcome.
ENUMERATION_LIMIT = 200_000
#: Tractability bounds on the scheme parameters.
MAX_D_BELL = 6
MAX_D_GHZ = 4
MAX_N_CHAIN = 8
WEIGHT_TOL = 1e-9

MU, ETA = 0, 1


class SchemeValidityError(ValueError):
    """The requested (kind, d) combination is outside a scheme's validity."""


class CapacityError(SchemeValidityError):
    """Parameters exceed the hard-coded tractability bounds."""


class NotApplicableError(ValueError):
    """No closed-form success probability exists for the request."""


class SchemeKind(str, Enum):
    QUBIT_BELL_4SMS = "QubitBell4SMS"
    QUBIT_GHZ_CHAIN = "QubitGHZChain"
    QUDIT_BELL_3SMS = "QuditBell3SMS"
    QUDIT_BELL_INVERTED = "QuditBellInverted"
    QUDIT_BELL_COMBINED = "QuditBellCombined"
    QUDIT_GHZ_4SMS = "QuditGHZ4SMS"
    QUDIT_BELL_2SMS = "QuditBell2SMS_AppendixA"


_SUBTRACTABLE = {SchemeKind.QUDIT_BELL_3SMS, SchemeKind.QUDIT_BELL_INVERTED,
                 SchemeKind.QUDIT_BELL_COMBINED, SchemeKind.QUDIT_GHZ_4SMS}


@dataclass(frozen=True)
class SchemeSpec:
    kind: SchemeKind
    d: int = 2
    n_ghz: int = 2
    subtraction: bool = False
    one_shot: bool = False
    # which end of an odd GHZ chain drops a mode: "last" detects modes 2 and 4
    # of the last 4SMS, "first" modes 1 and 3 of the first
    odd_termination: str = "last"

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))

    def validate(self, *, for_simulation: bool = True) -> None:
        k, d = self.kind, self.d
        if self.subtraction and k not in _SUBTRACTABLE:
            raise SchemeValidityError(f"{k.value} has no photon-subtraction variant")
        if self.one_shot and not self.subtraction:
            raise SchemeValidityError("one_shot only applies to photon-subtraction variants")
        if k == SchemeKind.QUBIT_GHZ_CHAIN:
            if self.n_ghz < 2:
                raise SchemeValidityError("a GHZ chain needs n_ghz >= 2")
            if self.odd_termination not in ("last", "first"):
                raise SchemeValidityError("odd_termination must be 'last' or 'first'")
            if for_simulation and self.n_ghz > MAX_N_CHAIN:
                raise CapacityError(f"n_ghz={self.n_ghz} exceeds the bound n_ghz <= {MAX_N_CHAIN}")
            return
        if k == SchemeKind.QUBIT_BELL_4SMS:
            return
        min_d = 2 if for_simulation else 1
        if d < min_d:
            raise SchemeValidityError(f"{k.value} needs d >= {min_d}, got d={d}")
        if k in (SchemeKind.QUDIT_BELL_INVERTED, SchemeKind.QUDIT_BELL_COMBINED) \
                and not self.subtraction and d != 3:
            raise SchemeValidityError(
                f"{k.value} without photon subtraction only works for d = 3 (got d={d})")
        if k == SchemeKind.QUDIT_BELL_COMBINED and self.subtraction and d < 3:
            raise SchemeValidityError("the combined Bell count needs d >= 3")
        if for_simulation:
            bound = MAX_D_GHZ if k == SchemeKind.QUDIT_GHZ_4SMS else MAX_D_BELL
            if d > bound:
                raise CapacityError(f"d={d} exceeds the bound d <= {bound} for {k.value}")


# ---------------------------------------------------------------- closed forms

def closed_form_probability(spec: SchemeSpec) -> Fraction:
    """Exact success probability of ``spec`` from the matching formula."""
    if spec.kind == SchemeKind.QUDIT_BELL_COMBINED and not spec.subtraction and spec.d != 3:
        raise NotApplicableError(f"no closed form for {spec.kind.value} without subtraction "
                                 f"at d={spec.d}; only d = 3 is covered")
    spec.validate(for_simulation=False)
    k, d = spec.kind, spec.d
    if k == SchemeKind.QUBIT_BELL_4SMS:
        return Fraction(1, 8)
    if k == SchemeKind.QUBIT_GHZ_CHAIN:
        n = spec.n_ghz
        return Fraction(1, 2 ** (2 * n - 1)) if n % 2 == 0 else Fraction(1, 2 ** (2 * n))
    if k == SchemeKind.QUDIT_BELL_2SMS:
        return Fraction(d, 2 ** (2 * d - 1))
    if not spec.subtraction:
        if k == SchemeKind.QUDIT_BELL_3SMS:
            return Fraction(d * 2 ** (d - 1), 3 ** (2 * d - 1))
        if k == SchemeKind.QUDIT_BELL_INVERTED:
            return Fraction(d) * Fraction(2, 9) * Fraction(1, 3) ** (d - 1)
        if k == SchemeKind.QUDIT_BELL_COMBINED:
            return (closed_form_probability(SchemeSpec(SchemeKind.QUDIT_BELL_3SMS, d))
                    + closed_form_probability(SchemeSpec(SchemeKind.QUDIT_BELL_INVERTED, d)))
        if k == SchemeKind.QUDIT_GHZ_4SMS:
            return Fraction(d * 3 ** (d - 1), 2 ** (5 * d - 3))
        raise NotApplicableError(f"no closed form for {k.value}")
    if k == SchemeKind.QUDIT_BELL_3SMS:
        p = Fraction(d * 2 ** (d - 1), 3 ** d)
    elif k == SchemeKind.QUDIT_BELL_INVERTED:
        p = Fraction(2 * d, 3 ** d)
    elif k == SchemeKind.QUDIT_BELL_COMBINED:
        p = Fraction(d * (2 + 2 ** (d - 1)), 3 ** d)
    elif k == SchemeKind.QUDIT_GHZ_4SMS:
        p = Fraction(d * 3 ** (d - 1), 2 ** (3 * d - 1))
    else:
        raise NotApplicableError(f"no closed form for {k.value} with subtraction")
    if spec.one_shot:
        occupancy = Fraction(17, 32) if k == SchemeKind.QUDIT_GHZ_4SMS else Fraction(5, 9)
        p *= occupancy ** d
    return p


# ---------------------------------------------------------------- results

@dataclass
class SchemeResult:
    spec: SchemeSpec
    total_probability: float
    closed_form: float
    closed_form_exact: Fraction | None
    outcomes: list
    block_structure: dict
    # per outcome: name of the target branch family it should match
    outcome_targets: list = field(default_factory=list)
    # target family name -> normalized branch states, in canonical order
    targets: dict = field(default_factory=dict)
    method: str = "enumerated"

    @property
    def deviation(self) -> float:
        return abs(self.total_probability - self.closed_form)


@dataclass
class VerificationReport:
    passed: bool
    n_outcomes: int
    max_weight_deviation: float
    max_support_leak: float
    phases: list
    failures: list

    def summary(self) -> str:
        status = "ok" if self.passed else f"{len(self.failures)} failing outcome(s)"
        return (f"{self.n_outcomes} outcomes, max weight deviation "
                f"{self.max_weight_deviation:.3g}: {status}")


# ---------------------------------------------------------------- blocks

@dataclass(frozen=True)
class _Block:
    ports: int
    special: int   # heralding-mode count of the block carrying the entangled branch
    common: int    # heralding-mode count of every other block
    subtract: bool = False
    correct_ghz: bool = False


def _ghz_correction():
    # maps (|2,0> + |0,2>)/sqrt2 on 1-based modes 2 and 4 to |1,1>
    return compose(phase_shift([0.0, math.pi / 2]), dft_unitary(2))


@lru_cache(maxsize=None)
def block_sectors(ports: int, subtract: bool, correct_ghz: bool) -> tuple[dict, float]:
    """Residual states of one splitter fed with one photon per port.

    Returns ``({heralding count: unnormalized residual state}, occupancy)``
    where ``occupancy`` is the chance a subtraction on the heralding mode
    succeeds (1 without subtraction).
    """
    state = apply(dft_unitary(ports), product_input([1] * ports))
    occupancy = 1.0
    if subtract:
        state, occupancy = subtract_photon(state, 0)
    if correct_ghz:
        state = apply_on_modes(_ghz_correction(), [1, 3], state)
    sectors: dict[int, dict] = {}
    for key, amp in state.terms.items():
        sectors.setdefault(key[0], {})[key[1:]] = amp
    return ({h: StateVector(ports - 1, t) for h, t in sorted(sectors.items())}, occupancy)


def _block_model(spec: SchemeSpec) -> tuple[_Block, int]:
    k, d, sub = spec.kind, spec.d, spec.subtraction
    if k == SchemeKind.QUDIT_BELL_3SMS:
        return (_Block(3, 0, 2, True) if sub else _Block(3, 1, 3)), d
    if k == SchemeKind.QUDIT_BELL_INVERTED:
        return (_Block(3, 2, 0, True) if sub else _Block(3, 3, 1)), d
    if k == SchemeKind.QUDIT_GHZ_4SMS:
        return (_Block(4, 0, 3, True, True) if sub else _Block(4, 1, 4, False, True)), d
    if k == SchemeKind.QUDIT_BELL_2SMS:
        return _Block(2, 0, 2), 2 * d
    raise SchemeValidityError(f"{k.value} is not a connected-splitter scheme")


def detected_photons(spec: SchemeSpec) -> int:
    """Photons to detect at the connecting splitter."""
    block, n = _block_model(spec)
    return block.special + block.common * (n - 1)


def _branch_states(block: _Block, n_blocks: int) -> list[StateVector]:
    sectors, _ = block_sectors(block.ports, block.subtract, block.correct_ghz)
    special = sectors[block.special].normalized()
    common = sectors[block.common].normalized()
    branches = []
    for i in range(n_blocks):
        st = None
        for b in range(n_blocks):
            part = special if b == i else common
            st = part if st is None else st.tensor(part)
        branches.append(st)
    return branches


def _connected_inputs(block: _Block, n_blocks: int, m: int):
    """Heralding-mode occupations with total ``m`` and their residual states."""
    sectors, _ = block_sectors(block.ports, block.subtract, block.correct_ghz)
    inputs = []
    for hs in product(sorted(sectors), repeat=n_blocks):
        if sum(hs) != m:
            continue
        residual = None
        for h in hs:
            residual = sectors[h] if residual is None else residual.tensor(sectors[h])
        inputs.append((hs, residual))
    return inputs


def _outcomes_enumerated(inputs, n_blocks: int, herald_modes: list[int], residual_modes: int):
    connector = dft_unitary(n_blocks).matrix
    amplitudes = [(_evolve_terms(connector, {hs: 1.0}), residual) for hs, residual in inputs]
    sigmas = sorted({s for amps, _ in amplitudes for s in amps})
    outcomes = []
    for sigma in sigmas:
        terms: dict[tuple, complex] = {}
        for amps, residual in amplitudes:
            a = amps.get(sigma)
            if a is None or abs(a) < 1e-15:
                continue
            for key, r in residual.terms.items():
                terms[key] = terms.get(key, 0j) + a * r
        terms = {k: a for k, a in terms.items() if abs(a) >= PRUNE_THRESHOLD}
        prob = sum(abs(a) ** 2 for a in terms.values())
        if prob < 1e-24:
            continue
        scale = 1.0 / math.sqrt(prob)
        cond = StateVector._trusted(residual_modes, {k: a * scale for k, a in terms.items()})
        outcomes.append(HeraldOutcome(dict(zip(herald_modes, sigma)), prob, cond, term_phases(cond)))
    return outcomes


def _sample_sigmas(n_blocks: int, m: int, count: int, seed: int) -> list[tuple]:
    rng = np.random.default_rng(seed)
    picks = set()
    while len(picks) < count:
        # stars and bars: uniform over weak compositions
        bars = np.sort(rng.choice(m + n_blocks - 1, n_blocks - 1, replace=False))
        edges = np.concatenate(([-1], bars, [m + n_blocks - 1]))
        picks.add(tuple(int(x) for x in np.diff(edges) - 1))
    return sorted(picks)


def _outcomes_sampled(inputs, n_blocks, herald_modes, residual_modes, m, count, seed):
    connector = dft_unitary(n_blocks)
    outcomes = []
    for sigma in _sample_sigmas(n_blocks, m, count, seed):
        terms: dict[tuple, complex] = {}
        for hs, residual in inputs:
            a = transition_amplitude(connector, hs, sigma)
            for key, r in residual.terms.items():
                terms[key] = terms.get(key, 0j) + a * r
        cond = StateVector(residual_modes, terms)
        prob = cond.norm() ** 2
        if prob < 1e-24:
            continue
        cond = cond.normalized()
        outcomes.append(HeraldOutcome(dict(zip(herald_modes, sigma)), prob, cond, term_phases(cond)))
    return outcomes


def run_connected(spec: SchemeSpec, m: int | None = None, *, samples: int = 8,
                  seed: int = 0, force_enumeration: bool = False) -> SchemeResult:
    """Simulate one connected-splitter scheme, detecting ``m`` photons at the connector.

    ``m`` defaults to the scheme's heralding count; other values are used to
    check that wrong detection totals never pass verification. When the
    connector output space exceeds :data:`ENUMERATION_LIMIT`, the total comes
    from photon-number conservation of the lossless connector and only
    ``samples`` outcomes are computed. No validity checks are made here, so
    callers can probe combinations that :meth:`SchemeSpec.validate` rejects.
    """
    block, n_blocks = _block_model(spec)
    target_m = block.special + block.common * (n_blocks - 1)
    m = target_m if m is None else m
    sectors, occupancy = block_sectors(block.ports, block.subtract, block.correct_ghz)
    inputs = _connected_inputs(block, n_blocks, m)
    herald_modes = [b * block.ports for b in range(n_blocks)]
    residual_modes = n_blocks * (block.ports - 1)
    space = math.comb(m + n_blocks - 1, n_blocks - 1)
    if space <= ENUMERATION_LIMIT or force_enumeration:
        method = "enumerated"
        outcomes = _outcomes_enumerated(inputs, n_blocks, herald_modes, residual_modes)
        total = sum(o.probability for o in outcomes)
    else:
        method = "sector-marginal"
        outcomes = _outcomes_sampled(inputs, n_blocks, herald_modes, residual_modes, m, samples, seed)
        total = sum(r.norm() ** 2 for _, r in inputs)
    factor = occupancy ** n_blocks if spec.one_shot else 1.0
    if factor != 1.0:
        total *= factor
        outcomes = [HeraldOutcome(o.pattern_instance, o.probability * factor,
                                  o.conditional_state, o.phases) for o in outcomes]
    exact = None
    if m == target_m:
        try:
            exact = closed_form_probability(spec)
        except (SchemeValidityError, NotApplicableError):
            pass
    name = spec.kind.value + ("-" if spec.subtraction else "")
    structure = {
        "block": f"{block.ports}SMS", "n_blocks": n_blocks, "connector_ports": n_blocks,
        "detected_photons": m, "heralding_modes": herald_modes,
        "subtraction": spec.subtraction, "occupancy": occupancy,
        "one_shot_factor": factor, "connector_output_space": space,
    }
    return SchemeResult(spec, total, float(exact) if exact is not None else math.nan, exact,
                        outcomes, structure, [name] * len(outcomes),
                        {name: _branch_states(block, n_blocks)}, method)


# ---------------------------------------------------------------- qubit schemes

def _qubit_block_state() -> StateVector:
    layout = ModeLayout(4, 2)
    occ = [0] * layout.mode_count
    for s, label in enumerate((MU, ETA, MU, ETA)):
        occ[layout.index(s, label)] = 1
    return apply(on_internal_labels(dft_unitary(4), 2), product_input(occ))


class _Labeled:
    """A state whose flattened modes carry (block, spatial, internal) labels."""

    def __init__(self, labels: list, state: StateVector):
        self.labels = list(labels)
        self.state = state

    def index(self, label) -> int:
        return self.labels.index(label)

    def tensor(self, other: "_Labeled") -> "_Labeled":
        return _Labeled(self.labels + other.labels, self.state.tensor(other.state))

    def apply(self, u, labels: Sequence) -> "_Labeled":
        return _Labeled(self.labels, apply_on_modes(u, [self.index(l) for l in labels], self.state))

    def detect(self, counts: dict) -> "_Labeled | None":
        pattern = DetectionPattern({self.index(l): n for l, n in counts.items()})
        found = project(self.state, pattern)
        if not found:
            return None
        o = found[0]
        kept = [l for l in self.labels if l not in counts]
        return _Labeled(kept, o.conditional_state.scaled(math.sqrt(o.probability)))


def _block_labels(b: int) -> list:
    return [(b, s, i) for s in range(4) for i in (MU, ETA)]


def _pm_patterns(block: int, spatial_modes: Sequence[int], photons: int) -> list[dict]:
    """All ±-basis count assignments with ``photons`` photons over ``spatial_modes``."""
    labels = [(block, s, i) for s in spatial_modes for i in (MU, ETA)]
    out = []
    for counts in product(range(photons + 1), repeat=len(labels)):
        if sum(counts) == photons:
            out.append(dict(zip(labels, counts)))
    return out


def _chain_roles(n: int, odd_termination: str) -> list[dict]:
    """Per 4SMS: ±-detected spatial modes, connector modes and output modes."""
    if n == 2:
        return [{"pm": [2, 3], "left": None, "right": None, "out": [0, 1]}]
    n_blocks = n // 2 if n % 2 == 0 else (n + 1) // 2
    roles = []
    for b in range(n_blocks):
        left = 0 if b > 0 else None
        right = 3 if b < n_blocks - 1 else None
        used = {left, right} - {None}
        pm = [2] if b == 0 else ([1] if b == n_blocks - 1 else [])
        if n % 2 == 1:
            if odd_termination == "last" and b == n_blocks - 1:
                pm = [1, 3]
            if odd_termination == "first" and b == 0:
                pm = [0, 2]
        out = [s for s in range(4) if s not in used and s not in pm]
        roles.append({"pm": pm, "left": left, "right": right, "out": out})
    return roles


def _pm_detection_sets(b: int, role: dict) -> list[dict]:
    if len(role["pm"]) == 2 and role["pm"] != [2, 3]:
        # odd termination: accept every two-photon event on the two modes
        return _pm_patterns(b, role["pm"], 2)
    sets = [{}]
    for s in role["pm"]:
        sets = [{**acc, **p} for acc in sets for p in _pm_patterns(b, [s], 1)]
    return sets


def _rotate_pm(st: _Labeled, b: int, role: dict) -> _Labeled:
    hadamard = dft_unitary(2)
    for s in role["pm"]:
        st = st.apply(hadamard, [(b, s, MU), (b, s, ETA)])
    return st


def _chain_targets(roles: list[dict]) -> list[StateVector]:
    """The two GHZ branches: photon labels alternate mu/eta along each 4SMS."""
    out_labels = [(b, s) for b, r in enumerate(roles) for s in r["out"]]
    branches = []
    for flip in (0, 1):
        occ = []
        for _, s in out_labels:
            label = (s + flip) % 2
            occ += [1, 0] if label == MU else [0, 1]
        branches.append(product_input(occ))
    return sorted(branches, key=lambda s: s.items()[0][0])


def run_qubit_chain(spec: SchemeSpec) -> SchemeResult:
    """±-basis heralded Bell (one 4SMS) or GHZ chain (4SMSs joined by 2SMSs)."""
    n = 2 if spec.kind == SchemeKind.QUBIT_BELL_4SMS else spec.n_ghz
    roles = _chain_roles(n, spec.odd_termination)
    block_state = _qubit_block_state()
    lift2 = on_internal_labels(dft_unitary(2), 2)
    branches: list[tuple[dict, _Labeled]] = []
    first = _rotate_pm(_Labeled(_block_labels(0), block_state), 0, roles[0])
    for pattern in _pm_detection_sets(0, roles[0]):
        st = first.detect(pattern)
        if st is not None:
            branches.append((pattern, st))
    for b in range(1, len(roles)):
        nxt = _rotate_pm(_Labeled(_block_labels(b), block_state), b, roles[b])
        connector = [(b - 1, 3, MU), (b - 1, 3, ETA), (b, 0, MU), (b, 0, ETA)]
        new_branches = []
        for pattern, st in branches:
            joined = st.tensor(nxt).apply(lift2, connector)
            for mu_at in (0, 1):
                for eta_at in (0, 1):
                    counts = {lab: 0 for lab in connector}
                    counts[connector[2 * mu_at + MU]] += 1
                    counts[connector[2 * eta_at + ETA]] += 1
                    after = joined.detect(counts)
                    if after is None:
                        continue
                    for pm in _pm_detection_sets(b, roles[b]):
                        fin = after.detect(pm) if pm else after
                        if fin is not None:
                            new_branches.append(({**pattern, **counts, **pm}, fin))
        branches = new_branches
    pm_modes = {(b, s) for b, r in enumerate(roles) for s in r["pm"]}
    outcomes = []
    for pattern, st in branches:
        prob = st.state.norm() ** 2
        if prob < 1e-24:
            continue
        cond = st.state.normalized()
        instance = {_label_name(l, pm_modes): c for l, c in pattern.items()}
        outcomes.append(HeraldOutcome(instance, prob, cond, term_phases(cond)))
    total = sum(o.probability for o in outcomes)
    exact = closed_form_probability(spec)
    n_blocks = len(roles)
    structure = {"block": "4SMS", "n_blocks": n_blocks, "connector": "2SMS",
                 "n_connectors": n_blocks - 1, "n_ghz": n,
                 "pm_modes": [[s + 1 for s in r["pm"]] for r in roles],
                 "output_modes": [[s + 1 for s in r["out"]] for r in roles]}
    name = spec.kind.value
    return SchemeResult(spec, total, float(exact), exact, outcomes, structure,
                        [name] * len(outcomes), {name: _chain_targets(roles)})


def _label_name(label, pm_modes=frozenset()) -> str:
    # 1-based "block.mode" plus the detected internal state
    b, s, i = label
    if (b, s) in pm_modes:
        return f"{b + 1}.{s + 1}{'+' if i == 0 else '-'}"
    return f"{b + 1}.{s + 1}{'mu' if i == MU else 'eta'}"


# ---------------------------------------------------------------- dispatch

def build_and_run(spec: SchemeSpec, **kwargs) -> SchemeResult:
    spec.validate()
    if spec.kind in (SchemeKind.QUBIT_BELL_4SMS, SchemeKind.QUBIT_GHZ_CHAIN):
        return run_qubit_chain(spec)
    if spec.kind == SchemeKind.QUDIT_BELL_COMBINED:
        parts = [run_connected(SchemeSpec(k, spec.d, subtraction=spec.subtraction,
                                          one_shot=spec.one_shot), **kwargs)
                 for k in (SchemeKind.QUDIT_BELL_3SMS, SchemeKind.QUDIT_BELL_INVERTED)]
        exact = closed_form_probability(spec)
        return SchemeResult(
            spec, sum(p.total_probability for p in parts), float(exact), exact,
            parts[0].outcomes + parts[1].outcomes,
            {"parts": [p.block_structure for p in parts]},
            parts[0].outcome_targets + parts[1].outcome_targets,
            {**parts[0].targets, **parts[1].targets},
            "+".join(sorted({p.method for p in parts})))
    return run_connected(spec, **kwargs)


def verify_heralded_state(result: SchemeResult, tol: float = WEIGHT_TOL) -> VerificationReport:
    """Check every outcome against its target branch set.

    An outcome passes when its conditional state lies in the span of the
    target branches and every branch carries weight ``1/sqrt(#branches)``.
    """
    failures, phases = [], []
    max_dev = 0.0
    max_leak = 0.0
    for idx, (outcome, target) in enumerate(zip(result.outcomes, result.outcome_targets)):
        branches = result.targets[target]
        cond = outcome.conditional_state
        overlaps = [inner_product(b, cond) for b in branches]
        captured = sum(abs(c) ** 2 for c in overlaps)
        leak = max(0.0, 1.0 - captured)
        weight = 1.0 / math.sqrt(len(branches))
        dev = max(abs(abs(c) - weight) for c in overlaps)
        max_dev, max_leak = max(max_dev, dev), max(max_leak, leak)
        ref = np.angle(overlaps[0]) if abs(overlaps[0]) > 0 else 0.0
        phases.append([float(math.remainder(np.angle(c) - ref, 2 * math.pi)) for c in overlaps])
        if leak > tol or dev > tol:
            failures.append(_describe_failure(idx, outcome, branches, leak, dev))
    return VerificationReport(not failures and bool(result.outcomes), len(result.outcomes),
                              max_dev, max_leak, phases, failures)


def _describe_failure(idx, outcome, branches, leak, dev) -> dict:
    allowed = {k for b in branches for k in b.terms}
    stray = [k for k in outcome.conditional_state if k not in allowed]
    missing = [b.items()[0][0] for b in branches
               if not any(k in outcome.conditional_state for k in b.terms)]
    return {
        "outcome": idx,
        "pattern": {str(m): n for m, n in outcome.pattern_instance.items()},
        "unexpected_term": "|" + ",".join(map(str, stray[0])) + "⟩" if stray else None,
        "missing_branches": len(missing),
        "support_leak": leak,
        "weight_deviation": dev,
    }
