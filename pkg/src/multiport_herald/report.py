"""Serialization of scheme results, dimension sweeps and plot data."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

from .schemes import (MAX_D_BELL, MAX_D_GHZ, CapacityError, SchemeKind, SchemeResult,
                      SchemeSpec, SchemeValidityError, build_and_run, closed_form_probability,
                      verify_heralded_state)

SCHEMA_VERSION = 1
FLOAT_DIGITS = 12
#: Largest allowed |simulated - closed form| in a sweep row.
SWEEP_TOL = 1e-9


def fmt(x) -> str:
    """Fixed 12-significant-digit rendering used in every CSV cell."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, Fraction)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{0.0 if abs(x) < 1e-300 else x:.{FLOAT_DIGITS}g}"
    return str(x)


def _write_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- single runs

def spec_to_dict(spec: SchemeSpec) -> dict:
    return {"kind": spec.kind.value, "d": spec.d, "n_ghz": spec.n_ghz,
            "subtraction": spec.subtraction, "one_shot": spec.one_shot,
            "odd_termination": spec.odd_termination}


def result_to_dict(result: SchemeResult, report=None) -> dict:
    report = report or verify_heralded_state(result)
    exact = result.closed_form_exact
    outcomes = []
    for o, target, ph in zip(result.outcomes, result.outcome_targets, report.phases):
        entry = o.to_dict()
        entry["target"] = target
        entry["branch_phases"] = ph
        outcomes.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": spec_to_dict(result.spec),
        "total_probability": result.total_probability,
        "closed_form": None if exact is None else result.closed_form,
        "closed_form_exact": None if exact is None else str(exact),
        "method": result.method,
        "block_structure": result.block_structure,
        "verification": {"passed": report.passed, "n_outcomes": report.n_outcomes,
                         "max_weight_deviation": report.max_weight_deviation,
                         "max_support_leak": report.max_support_leak,
                         "failures": report.failures},
        "outcomes": outcomes,
    }


SUMMARY_HEADER = ["kind", "d", "n_ghz", "subtraction", "one_shot", "simulated_p",
                  "closed_form_p", "closed_form_exact", "max_branch_weight_deviation",
                  "n_outcomes", "method"]


def summary_csv(result: SchemeResult, report) -> str:
    s = result.spec
    exact = result.closed_form_exact
    row = [s.kind.value, s.d, s.n_ghz, s.subtraction, s.one_shot, result.total_probability,
           None if exact is None else float(exact), None if exact is None else str(exact),
           report.max_weight_deviation, report.n_outcomes, result.method]
    return _write_csv(SUMMARY_HEADER, [row])


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class Variant:
    name: str
    curve: str
    kind: SchemeKind
    subtraction: bool = False
    min_d: int = 2
    only_d: int | None = None

    def applies(self, d: int) -> bool:
        if self.only_d is not None:
            return d == self.only_d
        return d >= self.min_d

    def curve_name(self, one_shot: bool) -> str:
        # one-shot curves are primed; schemes without subtraction are unaffected
        return self.curve.replace("p_", "p'_", 1) if one_shot and self.subtraction else self.curve


FAMILIES = {
    "bell": [
        Variant("plain", "p_dBell", SchemeKind.QUDIT_BELL_3SMS),
        Variant("bell2", "p_dBell2", SchemeKind.QUDIT_BELL_2SMS),
        Variant("sub", "p_dBell-", SchemeKind.QUDIT_BELL_3SMS, True),
        Variant("inv_sub", "p_dBellbar-", SchemeKind.QUDIT_BELL_INVERTED, True),
        Variant("sum_sub", "p_dSumBell-", SchemeKind.QUDIT_BELL_COMBINED, True, min_d=3),
        Variant("inv", "p_dBellbar", SchemeKind.QUDIT_BELL_INVERTED, only_d=3),
        Variant("sum", "p_dSumBell", SchemeKind.QUDIT_BELL_COMBINED, only_d=3),
    ],
    "ghz": [
        Variant("plain", "p_dGHZ", SchemeKind.QUDIT_GHZ_4SMS),
        Variant("sub", "p_dGHZ-", SchemeKind.QUDIT_GHZ_4SMS, True),
    ],
}
DEFAULT_VARIANTS = {"bell": ["plain", "bell2", "sub", "inv_sub", "sum_sub"],
                    "ghz": ["plain", "sub"]}
FAMILY_BOUNDS = {"bell": MAX_D_BELL, "ghz": MAX_D_GHZ}


@dataclass
class SweepRow:
    family: str
    variant: str
    curve: str
    d: int
    one_shot: bool
    simulated: float
    closed_form: float
    closed_form_exact: str
    abs_diff: float
    max_weight_deviation: float
    n_outcomes: int
    method: str
    passed: bool


SWEEP_HEADER = list(SweepRow.__dataclass_fields__)


def _variant(family: str, name: str) -> Variant:
    for v in FAMILIES[family]:
        if v.name == name:
            return v
    known = ", ".join(v.name for v in FAMILIES[family])
    raise SchemeValidityError(f"unknown {family} variant {name!r} (known: {known})")


def sweep_plan(family: str, d_min: int, d_max: int, variants=None,
               one_shot: bool = False) -> list[tuple]:
    """Validated (family, variant, d, one_shot) tasks in output order."""
    if family not in FAMILIES:
        raise SchemeValidityError(f"unknown sweep kind {family!r} (known: {', '.join(FAMILIES)})")
    bound = FAMILY_BOUNDS[family]
    if d_min < 2 or d_min > d_max:
        raise SchemeValidityError(f"need 2 <= d_min <= d_max, got d_min={d_min}, d_max={d_max}")
    if d_max > bound:
        raise CapacityError(f"d_max={d_max} exceeds the bound d <= {bound} for the {family} family")
    chosen = [_variant(family, v) for v in (variants or DEFAULT_VARIANTS[family])]
    return [(family, v.name, d, one_shot and v.subtraction)
            for d in range(d_min, d_max + 1) for v in chosen if v.applies(d)]


def _sweep_row(task: tuple) -> SweepRow:
    family, name, d, one_shot = task
    v = _variant(family, name)
    spec = SchemeSpec(v.kind, d, subtraction=v.subtraction, one_shot=one_shot)
    result = build_and_run(spec)
    report = verify_heralded_state(result)
    exact = closed_form_probability(spec)
    diff = abs(result.total_probability - float(exact))
    return SweepRow(family, name, v.curve_name(one_shot), d, one_shot, result.total_probability,
                    float(exact), str(exact), diff, report.max_weight_deviation,
                    report.n_outcomes, result.method, report.passed and diff < SWEEP_TOL)


def run_sweep(tasks: list[tuple], jobs: int | None = None) -> list[SweepRow]:
    """Compute rows, in parallel when ``jobs > 1``; order always follows ``tasks``."""
    jobs = min(jobs or os.cpu_count() or 1, len(tasks) or 1)
    if jobs <= 1:
        return [_sweep_row(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_row, tasks))


def sweep_csv(rows: list[SweepRow]) -> str:
    return _write_csv(SWEEP_HEADER, [list(asdict(r).values()) for r in rows])


# ---------------------------------------------------------------- plot data

FIGURES = {
    6: ("bell", False),
    7: ("ghz", False),
    8: ("bell", True),
    9: ("ghz", True),
}


def figure_tasks(figure: int) -> list[tuple]:
    family, one_shot = FIGURES[figure]
    return sweep_plan(family, 2, FAMILY_BOUNDS[family], one_shot=one_shot)


PLOT_HEADER = ["figure", "curve", "d", "simulated", "closed_form"]


def plot_csv(figure: int, rows: list[SweepRow]) -> str:
    return _write_csv(PLOT_HEADER, [[figure, r.curve, r.d, r.simulated, r.closed_form]
                                    for r in rows])


def plot_json(figure: int, rows: list[SweepRow]) -> str:
    curves: dict[str, list] = {}
    for r in rows:
        curves.setdefault(r.curve, []).append(
            {"d": r.d, "simulated": float(fmt(r.simulated)),
             "closed_form": float(fmt(r.closed_form)), "closed_form_exact": r.closed_form_exact})
    family, one_shot = FIGURES[figure]
    return json.dumps({"schema_version": SCHEMA_VERSION, "figure": figure, "family": family,
                       "one_shot": one_shot, "x": "d", "y": "success probability",
                       "curves": curves}, indent=2) + "\n"
