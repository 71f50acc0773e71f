"""Command-line front end: ``simulate``, ``sweep``, ``verify`` and ``emit-plot-data``.

Exit codes: 0 success, 1 failed acceptance criterion, 2 unreadable config,
3 invalid or out-of-bounds scheme parameters, 4 failed invariant check.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

from . import __version__
from .acceptance import FaultHooks, run_all
from .report import (FIGURES, figure_tasks, plot_csv, plot_json, result_to_dict, run_sweep,
                     summary_csv, sweep_csv, sweep_plan)
from .schemes import SchemeKind, SchemeSpec, SchemeValidityError, build_and_run, verify_heralded_state

EXIT_CRITERION, EXIT_CONFIG, EXIT_VALIDITY, EXIT_INVARIANT = 1, 2, 3, 4
INVARIANT_TOL = 1e-9


class ConfigError(ValueError):
    pass


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- config

def load_config(path: str) -> tuple[SchemeSpec, dict]:
    """Read a scheme config; keys may sit in ``[scheme]`` or at top level.

    Returns the spec plus output settings (``json``, ``csv``, ``seed``).
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if not text.lstrip().startswith("["):
            text = "[scheme]\n" + text
        parser.read_string(text, source=path)
    except (OSError, configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    sec = parser["scheme"] if parser.has_section("scheme") else parser[parser.default_section]
    if "kind" not in sec:
        raise ConfigError("config is missing the 'kind' key")
    try:
        kind = SchemeKind(sec["kind"].strip())
    except ValueError:
        known = ", ".join(k.value for k in SchemeKind)
        raise ConfigError(f"unknown kind {sec['kind']!r} (known: {known})") from None
    try:
        spec = SchemeSpec(kind, sec.getint("d", 2), n_ghz=sec.getint("n_ghz", 2),
                          subtraction=sec.getboolean("subtraction", False),
                          one_shot=sec.getboolean("one_shot", False),
                          odd_termination=sec.get("odd_termination", "last").strip())
        seed = sec.getint("seed", 0)
    except ValueError as exc:
        raise ConfigError(f"bad value in config: {exc}") from exc
    out = parser["output"] if parser.has_section("output") else {}
    stem = Path(path).with_suffix("")
    return spec, {"json": out.get("json", f"{stem}.result.json"),
                  "csv": out.get("csv", f"{stem}.summary.csv"), "seed": seed}


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    try:
        spec, outputs = load_config(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "ConfigError", str(exc))
    if args.json:
        outputs["json"] = args.json
    if args.csv:
        outputs["csv"] = args.csv
    try:
        result = build_and_run(spec, seed=outputs["seed"])
    except SchemeValidityError as exc:
        return _fail(EXIT_VALIDITY, type(exc).__name__, str(exc))
    report = verify_heralded_state(result)
    _emit(json.dumps(result_to_dict(result, report), indent=1) + "\n", outputs["json"])
    _emit(summary_csv(result, report), outputs["csv"])
    problems = []
    if not math.isnan(result.closed_form) and result.deviation >= INVARIANT_TOL:
        problems.append(f"simulated p deviates from the closed form by {result.deviation:.3g}")
    if not report.passed:
        problems.append(f"heralded-state check failed: {report.summary()}")
    if not 0.0 <= result.total_probability <= 1.0 + INVARIANT_TOL:
        problems.append(f"total probability {result.total_probability} outside [0, 1]")
    if problems:
        return _fail(EXIT_INVARIANT, "InvariantFailure", "; ".join(problems))
    return 0


def cmd_sweep(args) -> int:
    variants = [v.strip() for v in args.variants.split(",")] if args.variants else None
    try:
        tasks = sweep_plan(args.kind, args.d_min, args.d_max, variants, args.one_shot)
    except SchemeValidityError as exc:
        return _fail(EXIT_VALIDITY, type(exc).__name__, str(exc))
    rows = run_sweep(tasks, args.jobs)
    _emit(sweep_csv(rows), args.out)
    bad = [r for r in rows if not r.passed]
    if bad:
        names = ", ".join(f"{r.variant}@d={r.d}" for r in bad)
        return _fail(EXIT_INVARIANT, "InvariantFailure", f"rows failed checks: {names}")
    return 0


def cmd_verify(args) -> int:
    hooks = FaultHooks(perturb_dft=args.perturb_dft, oracle_offset=args.inject_oracle_error)
    only = [int(x) for x in args.only.split(",")] if args.only else None
    failed = 0
    for res in run_all(hooks, only):
        print(json.dumps(res.to_dict()), flush=True)
        failed += not res.passed
    print(json.dumps({"summary": {"failed": failed, "passed": failed == 0}}))
    return EXIT_CRITERION if failed else 0


def cmd_emit_plot_data(args) -> int:
    rows = run_sweep(figure_tasks(args.figure), args.jobs)
    text = plot_json(args.figure, rows) if args.format == "json" else plot_csv(args.figure, rows)
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiport-herald",
                                description="Exact simulation of multiport heralding schemes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scheme described by a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--json", help="override the result JSON path")
    s.add_argument("--csv", help="override the summary CSV path")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="simulate a scheme family over a range of d")
    s.add_argument("--kind", required=True, choices=["bell", "ghz"])
    s.add_argument("--d-min", type=int, default=2)
    s.add_argument("--d-max", type=int, required=True)
    s.add_argument("--variants", help="comma-separated, e.g. plain,sub,sum_sub")
    s.add_argument("--one-shot", action="store_true",
                   help="report subtraction variants without repeat-until-success")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", help="run the acceptance criteria")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--perturb-dft", type=float, default=0.0, help=argparse.SUPPRESS)
    s.add_argument("--inject-oracle-error", type=float, default=0.0, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("emit-plot-data", help="data behind one probability figure")
    s.add_argument("--figure", type=int, required=True, choices=sorted(FIGURES))
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_emit_plot_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
