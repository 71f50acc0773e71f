"""Executable acceptance criteria shared by ``verify`` and the test suite.

Each criterion returns ``(passed, detail)``. :class:`FaultHooks` lets tests
break one ingredient on purpose and watch the matching criterion fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .evolution import amplitude_permanent, apply, output_space, subtract_photon
from .fock import StateVector, product_input
from .heralding import DetectionPattern, project
from .interferometer import (Provenance, Unitary, compose, dft_unitary, embed, phase_shift,
                             random_unitary)
from .schemes import (SchemeKind, SchemeSpec, build_and_run, closed_form_probability,
                      run_connected, verify_heralded_state)

TOL = 1e-9
S2, S3 = math.sqrt(2), math.sqrt(3)


@dataclass
class FaultHooks:
    """Deliberate faults for checking that criteria can fail."""

    perturb_dft: float = 0.0       # added to entry [0, 0] of every DFT the unitarity check sees
    oracle_offset: float = 0.0     # added to every permanent-oracle amplitude

    def dft(self, n: int) -> Unitary:
        u = dft_unitary(n)
        if not self.perturb_dft:
            return u
        m = u.matrix.copy()
        m[0, 0] += self.perturb_dft
        return Unitary(m, Provenance("DFT", {"N": n, "perturbed": True}), check=False)

    def oracle(self, u, inp, out) -> complex:
        return amplitude_permanent(u, inp, out) + self.oracle_offset


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2} {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed,
                "detail": self.detail, "seconds": round(self.seconds, 3)}


def _state_diff(state: StateVector, expected: dict) -> float:
    keys = set(state.terms) | set(expected)
    return max(abs(state[k] - expected.get(k, 0)) for k in keys)


def _scheme_ok(spec: SchemeSpec, exact: Fraction | None = None) -> tuple[bool, str]:
    result = build_and_run(spec)
    report = verify_heralded_state(result)
    target = exact if exact is not None else closed_form_probability(spec)
    diff = abs(result.total_probability - float(target))
    ok = diff < TOL and report.passed
    label = f"{spec.kind.value}(d={spec.d}{', sub' if spec.subtraction else ''}" \
            f"{', one-shot' if spec.one_shot else ''})"
    return ok, f"{label} p={result.total_probability:.12g} vs {target} (diff {diff:.1e}, " \
               f"{'states ok' if report.passed else 'state check failed'})"


def _all(checks: list[tuple[bool, str]]) -> tuple[bool, str]:
    bad = [d for ok, d in checks if not ok]
    if bad:
        return False, "; ".join(bad[:3])
    return True, f"{len(checks)} checks"


# ---------------------------------------------------------------- criteria

TRITTER = {(3, 0, 0): S2 / 3, (0, 3, 0): S2 / 3, (0, 0, 3): S2 / 3, (1, 1, 1): -1 / S3}
QUITTER = {
    (4, 0, 0, 0): S3 / (4 * S2), (0, 4, 0, 0): -S3 / (4 * S2),
    (0, 0, 4, 0): S3 / (4 * S2), (0, 0, 0, 4): -S3 / (4 * S2),
    (1, 2, 1, 0): 1 / (2 * S2), (0, 1, 2, 1): -1 / (2 * S2),
    (1, 0, 1, 2): 1 / (2 * S2), (2, 1, 0, 1): -1 / (2 * S2),
    (0, 2, 0, 2): 0.25, (2, 0, 2, 0): -0.25,
}
QUITTER_13 = {(2, 0, 0, 0): 1 / (2 * S2), (0, 2, 0, 0): -1 / (2 * S2),
              (0, 0, 2, 0): 1 / (2 * S2), (0, 0, 0, 2): -1 / (2 * S2),
              (1, 0, 1, 0): 0.5, (0, 1, 0, 1): -0.5}
QUITTER_24 = {(2, 0, 0, 0): 1 / (2 * S2), (0, 2, 0, 0): 1 / (2 * S2),
              (0, 0, 2, 0): 1 / (2 * S2), (0, 0, 0, 2): 1 / (2 * S2),
              (1, 0, 1, 0): -0.5, (0, 1, 0, 1): -0.5}
TRITTER_SUB = {(2, 0, 0): S2 / S3, (0, 1, 1): -1 / S3}
QUITTER_SUB = {(3, 0, 0, 0): S3 / (2 * S2), (1, 1, 0, 1): -0.5,
               (0, 2, 1, 0): 1 / (2 * S2), (0, 0, 1, 2): 1 / (2 * S2),
               (1, 0, 2, 0): -1 / (2 * S2)}


def c01_tritter(hooks: FaultHooks) -> tuple[bool, str]:
    t0 = time.perf_counter()
    out = apply(dft_unitary(3), product_input([1, 1, 1]))
    dt = time.perf_counter() - t0
    diff = _state_diff(out, TRITTER)
    return diff < TOL and dt < 1.0, f"max term error {diff:.1e} in {dt * 1e3:.1f} ms"


def c02_quitter(hooks: FaultHooks) -> tuple[bool, str]:
    u = dft_unitary(4)
    errs = [_state_diff(apply(u, product_input(inp)), exp) for inp, exp in
            (([1, 1, 1, 1], QUITTER), ([1, 0, 1, 0], QUITTER_13), ([0, 1, 0, 1], QUITTER_24))]
    return max(errs) < TOL, "max term errors " + ", ".join(f"{e:.1e}" for e in errs)


def c03_qubit_bell(hooks: FaultHooks) -> tuple[bool, str]:
    result = build_and_run(SchemeSpec(SchemeKind.QUBIT_BELL_4SMS))
    diff = abs(result.total_probability - 0.125)
    wrong = 0
    for o in result.outcomes:
        # "+"-counts on modes 3 and 4; equal signs give the antisymmetric Bell state
        same = o.pattern_instance["1.3+"] == o.pattern_instance["1.4+"]
        c = o.conditional_state
        ratio = c[(1, 0, 0, 1)] / c[(0, 1, 1, 0)]
        if abs(ratio - (-1 if same else 1)) > TOL:
            wrong += 1
    ok = diff < TOL and wrong == 0 and len(result.outcomes) == 4
    return ok, f"p={result.total_probability:.12g} (diff {diff:.1e}), {wrong} sign mismatches " \
               f"over {len(result.outcomes)} outcomes"


def c04_ghz_chain(hooks: FaultHooks) -> tuple[bool, str]:
    checks = []
    for n in range(2, 9):
        t0 = time.perf_counter()
        ok, detail = _scheme_ok(SchemeSpec(SchemeKind.QUBIT_GHZ_CHAIN, n_ghz=n))
        dt = time.perf_counter() - t0
        checks.append((ok, f"N={n}: {detail}"))
    checks.append((dt < 60.0, f"N=8 took {dt:.1f} s"))
    ok, detail = _all(checks)
    return ok, f"{detail}, N=8 in {dt:.1f} s" if ok else detail


def c05_qudit_bell(hooks: FaultHooks) -> tuple[bool, str]:
    explicit = {2: Fraction(4, 27), 3: Fraction(4, 81)}
    checks = [_scheme_ok(SchemeSpec(SchemeKind.QUDIT_BELL_3SMS, d), explicit.get(d))
              for d in range(2, 7)]
    return _all(checks)


def c06_inverted(hooks: FaultHooks) -> tuple[bool, str]:
    checks = [_scheme_ok(SchemeSpec(SchemeKind.QUDIT_BELL_INVERTED, 3), Fraction(2, 27)),
              _scheme_ok(SchemeSpec(SchemeKind.QUDIT_BELL_COMBINED, 3), Fraction(10, 81))]
    broken = verify_heralded_state(run_connected(SchemeSpec(SchemeKind.QUDIT_BELL_INVERTED, 4)))
    checks.append((not broken.passed, f"inverted d=4 support check "
                   f"{'failed as expected' if not broken.passed else 'unexpectedly passed'}"))
    return _all(checks)


def c07_qudit_ghz(hooks: FaultHooks) -> tuple[bool, str]:
    explicit = {2: Fraction(3, 64), 3: Fraction(27, 4096)}
    checks = []
    for d in range(2, 5):
        t0 = time.perf_counter()
        checks.append(_scheme_ok(SchemeSpec(SchemeKind.QUDIT_GHZ_4SMS, d), explicit.get(d)))
        dt = time.perf_counter() - t0
    checks.append((dt < 300.0, f"d=4 took {dt:.1f} s"))
    return _all(checks)


def c08_subtraction(hooks: FaultHooks) -> tuple[bool, str]:
    checks = []
    s3, p3 = subtract_photon(apply(dft_unitary(3), product_input([1, 1, 1])), 0)
    s4, p4 = subtract_photon(apply(dft_unitary(4), product_input([1, 1, 1, 1])), 0)
    checks.append((_state_diff(s3, TRITTER_SUB) < TOL, "tritter subtracted state"))
    checks.append((_state_diff(s4, QUITTER_SUB) < TOL, "quitter subtracted state"))
    checks.append((abs(p3 - 5 / 9) < TOL, f"tritter occupancy {p3:.12g}"))
    checks.append((abs(p4 - 17 / 32) < TOL, f"quitter occupancy {p4:.12g}"))
    bell = [SchemeKind.QUDIT_BELL_3SMS, SchemeKind.QUDIT_BELL_INVERTED, SchemeKind.QUDIT_BELL_COMBINED]
    for d in range(2, 7):
        for kind in bell:
            if kind == SchemeKind.QUDIT_BELL_COMBINED and d < 3:
                continue
            checks.append(_scheme_ok(SchemeSpec(kind, d, subtraction=True)))
            checks.append(_one_shot_ok(kind, d, Fraction(5, 9)))
    for d in range(2, 5):
        checks.append(_scheme_ok(SchemeSpec(SchemeKind.QUDIT_GHZ_4SMS, d, subtraction=True)))
        checks.append(_one_shot_ok(SchemeKind.QUDIT_GHZ_4SMS, d, Fraction(17, 32)))
    checks.append(_scheme_ok(SchemeSpec(SchemeKind.QUDIT_BELL_COMBINED, 3, subtraction=True),
                             Fraction(2, 3)))
    return _all(checks)


def _one_shot_ok(kind: SchemeKind, d: int, occupancy: Fraction) -> tuple[bool, str]:
    rus = build_and_run(SchemeSpec(kind, d, subtraction=True)).total_probability
    once = build_and_run(SchemeSpec(kind, d, subtraction=True, one_shot=True)).total_probability
    target = rus * float(occupancy) ** d
    return abs(once - target) < TOL, f"{kind.value} one-shot d={d}: {once:.12g} vs {target:.12g}"


def c09_beam_splitter_bell(hooks: FaultHooks) -> tuple[bool, str]:
    checks = [_scheme_ok(SchemeSpec(SchemeKind.QUDIT_BELL_2SMS, d),
                         Fraction(1, 4) if d == 2 else None) for d in range(2, 7)]
    return _all(checks)


def connected_scheme_rows(d: int) -> list[tuple[str, int, int, int, int]]:
    """``(name, m, D, m1, m2)`` for each connected scheme at dimension ``d``."""
    return [("Bell 3SMS", 3 * d - 2, d, 1, 3),
            ("GHZ 4SMS", 4 * d - 3, d, 1, 4),
            ("Bell 2SMS", 4 * d - 2, 2 * d, 0, 2)]


def cyclic_shift_deviation(m: int, n_ports: int, m1: int, m2: int) -> float:
    """Largest spread of ``P(sigma | gamma_j)`` over the cyclic shifts ``j``."""
    u = dft_unitary(n_ports)
    space = output_space(n_ports, m)
    probs = []
    for j in range(n_ports):
        gamma = [m2] * n_ports
        gamma[j] = m1
        out = apply(u, product_input(gamma))
        probs.append(np.array([abs(out[s]) ** 2 for s in space]))
    probs = np.array(probs)
    return float(np.max(probs.max(axis=0) - probs.min(axis=0)))


def c10_cyclic_shift(hooks: FaultHooks) -> tuple[bool, str]:
    checks = []
    for d in range(2, 5):
        for name, m, n_ports, m1, m2 in connected_scheme_rows(d):
            dev = cyclic_shift_deviation(m, n_ports, m1, m2)
            checks.append((dev < TOL, f"{name} d={d}: spread {dev:.1e}"))
    return _all(checks)


def c11_oracle(hooks: FaultHooks) -> tuple[bool, str]:
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(200):
        dim = int(rng.integers(1, 6))
        photons = int(rng.integers(1, 5))
        u = random_unitary(dim, rng)
        inp = rng.multinomial(photons, [1 / dim] * dim)
        out = apply(u, product_input(inp))
        for sigma in output_space(dim, photons):
            worst = max(worst, abs(out[sigma] - hooks.oracle(u, inp, sigma)))
    return worst < TOL, f"200 random unitaries, max amplitude disagreement {worst:.1e}"


def c12_invariants(hooks: FaultHooks) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    unitaries = [hooks.dft(n) for n in range(1, 9)]
    unitaries += [embed(dft_unitary(2), [0, 3], 5),
                  compose(dft_unitary(2), phase_shift(rng.uniform(0, 2 * math.pi, 2)))]
    worst_u = max(u.unitarity_error() for u in unitaries)
    norm_err = completeness_err = 0.0
    conserved = True
    for _ in range(25):
        dim = int(rng.integers(2, 6))
        u = random_unitary(dim, rng)
        terms = {tuple(rng.multinomial(3, [1 / dim] * dim)): complex(*rng.standard_normal(2))
                 for _ in range(3)}
        out = apply(u, StateVector(dim, terms).normalized())
        norm_err = max(norm_err, abs(out.norm() - 1.0))
        conserved &= out.photon_numbers() == {3}
        total = sum(o.probability for o in every_instance(out, list(range(dim // 2))))
        completeness_err = max(completeness_err, abs(total - 1.0))
    checks = [(worst_u < 1e-10, f"unitarity error {worst_u:.1e}"),
              (norm_err < TOL, f"norm error {norm_err:.1e}"),
              (conserved, "photon number not conserved"),
              (completeness_err < TOL, f"completeness error {completeness_err:.1e}")]
    ok, detail = _all(checks)
    return ok, (f"unitarity {worst_u:.1e}, norm {norm_err:.1e}, "
                f"completeness {completeness_err:.1e}") if ok else detail


def every_instance(state: StateVector, detected: list[int]) -> list:
    """Outcomes of counting photons on ``detected``, over every possible count."""
    out = []
    for total in range(max(state.photon_numbers()) + 1):
        for counts in output_space(len(detected), total):
            out += project(state, DetectionPattern(dict(zip(detected, counts))))
    return out


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "tritter output", c01_tritter),
    (2, "quitter outputs", c02_quitter),
    (3, "qubit Bell heralding", c03_qubit_bell),
    (4, "GHZ chains", c04_ghz_chain),
    (5, "qudit Bell", c05_qudit_bell),
    (6, "inverted and combined Bell", c06_inverted),
    (7, "qudit GHZ", c07_qudit_ghz),
    (8, "photon subtraction", c08_subtraction),
    (9, "2SMS qudit Bell", c09_beam_splitter_bell),
    (10, "cyclic-shift invariance", c10_cyclic_shift),
    (11, "oracle equivalence", c11_oracle),
    (12, "invariant suite", c12_invariants),
]


def run_criterion(number: int, hooks: FaultHooks | None = None) -> CriterionResult:
    hooks = hooks or FaultHooks()
    _, name, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        passed, detail = fn(hooks)
    except Exception as exc:  # a crash is a failed criterion, not a crashed report
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def run_all(hooks: FaultHooks | None = None, only=None) -> list[CriterionResult]:
    numbers = sorted(only) if only else [n for n, _, _ in CRITERIA]
    return [run_criterion(n, hooks) for n in numbers]
