"""Command-line entry point: ``heatamp <command> ...``.

Exit codes: 0 success, 2 scenario/schema error, 3 solver failure (on every
point of a sweep), 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .energetics import terminal_currents
from .errors import HeatampError, ScenarioError
from .kinetics import generator, steady_state
from .model import STATE_LABELS, bohr_frequencies, energy_spectrum, validate
from .sweep import bundled_names, bundled_scenario, emit_csv, load_scenario, run_sweep, summarize

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _parse_override(text: str) -> tuple[str | None, float]:
    name, sep, value = text.rpartition("=")
    try:
        step = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected STEP or VARIABLE=STEP, got {text!r}") from None
    if not step > 0:
        raise argparse.ArgumentTypeError(f"step must be > 0, got {text!r}")
    return (name if sep else None), step


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatamp", description="Steady-state heat currents of a qubit-qutrit-qubit thermal device."
    )
    parser.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads for sweeps (default 1)")
    parser.add_argument(
        "--step-override", type=_parse_override, action="append", default=[], metavar="[VAR=]STEP",
        help="replace the grid step of the primary axis, or of VAR; may be repeated",
    )
    parser.add_argument("--format", choices=["csv"], default="csv", help="tabular output format")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in [
        ("validate", "check the scenario and report the working-hypothesis flags"),
        ("spectrum", "print the 12 energies and the 18 Bohr frequencies"),
        ("steady", "print the steady-state populations at the base temperatures"),
        ("currents", "print per-transition and terminal heat currents at the base temperatures"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("scenario", help="scenario JSON file")

    p = sub.add_parser("sweep", help="run the scenario grid and write a CSV table")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("-o", "--output", help="CSV destination ('-' for stdout; default: the scenario's output field)")

    p = sub.add_parser("figure", help="run a bundled figure scenario")
    p.add_argument("name", nargs="?", help="bundled scenario name (see --list)")
    p.add_argument("-o", "--outdir", default=".", help="directory for <name>.csv and <name>.summary.json")
    p.add_argument("--list", action="store_true", help="list bundled scenarios and exit")
    return parser


def _apply_overrides(scenario, overrides):
    for variable, step in overrides:
        scenario = scenario.with_step(variable, step)
    return scenario


def _table(rows, out=None) -> None:
    writer = csv.writer(out or sys.stdout, lineterminator="\n")
    for row in rows:
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def _cmd_validate(s) -> int:
    report = validate(s.device, s.temperatures)
    _table([
        ("field", "value"),
        ("name", s.name),
        ("grid_points", s.size),
        ("min_gap_separation", float(report.min_gap_separation)),
        ("max_decay_rate", float(report.max_decay_rate)),
        ("min_abs_bohr", float(report.min_abs_bohr)),
        ("secular_ok", int(report.secular_ok)),
        ("weak_coupling_ok", int(report.weak_coupling_ok)),
        ("reversed_gradient", int(report.reversed_gradient)),
        ("degeneracies", "; ".join(report.degeneracies)),
    ])
    return EXIT_OK


def _cmd_spectrum(s) -> int:
    spectrum = energy_spectrum(s.device)
    rows = [("kind", "label", "value")]
    rows += [("energy", label, float(e)) for label, e in zip(STATE_LABELS, spectrum.energies)]
    rows += [("bohr", label, float(w)) for label, w in bohr_frequencies(s.device).items()]
    _table(rows)
    return EXIT_OK


def _cmd_steady(s) -> int:
    pop = steady_state(generator(s.device, s.temperatures))
    _table([("state", "population")] + [(k, v) for k, v in pop.as_dict().items()] + [("residual", pop.residual)])
    return EXIT_OK


def _cmd_currents(s) -> int:
    report = terminal_currents(s.device, s.temperatures)
    rows = [("transition", "flux", "current")]
    rows += [(label, float(f), float(c)) for label, f, c in zip(report.labels, report.flux, report.currents)]
    rows += [(f"J_{a}", "", report.of(a)) for a in ("L", "M", "R")] + [("J_sum", "", report.residual)]
    _table(rows)
    return EXIT_OK


def _run_and_write(s, destination, threads) -> int:
    result = run_sweep(s, threads=threads)
    emit_csv(result, destination)
    if result.rows and result.failures == len(result.rows):
        print(f"heatamp: every grid point failed; first error: {result.rows[0]['status']}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_figure(args) -> int:
    if args.list or not args.name:
        for name in bundled_names():
            print(f"{name}\t{bundled_scenario(name).description}")
        return EXIT_OK
    try:
        s = _apply_overrides(bundled_scenario(args.name), args.step_override)
    except KeyError as exc:
        print(f"heatamp: {exc.args[0]}", file=sys.stderr)
        return EXIT_SCHEMA
    os.makedirs(args.outdir, exist_ok=True)
    result = run_sweep(s, threads=args.threads)
    emit_csv(result, os.path.join(args.outdir, f"{s.name}.csv"))
    with open(os.path.join(args.outdir, f"{s.name}.summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summarize(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if result.rows and result.failures == len(result.rows):
        return EXIT_SOLVER
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("heatamp: --threads must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        if args.command == "figure":
            return _cmd_figure(args)
        s = _apply_overrides(load_scenario(args.scenario), args.step_override)
        if args.command == "sweep":
            return _run_and_write(s, args.output or s.output_path, args.threads)
        return {"validate": _cmd_validate, "spectrum": _cmd_spectrum, "steady": _cmd_steady,
                "currents": _cmd_currents}[args.command](s)
    except ScenarioError as exc:
        print(f"heatamp: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"heatamp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HeatampError, ValueError) as exc:
        print(f"heatamp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
