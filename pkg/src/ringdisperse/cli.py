"""Command-line entry points: run, sweep, search, verify.

Trace files are line-delimited JSON, one object per round after a header
line, so they stream and diff cleanly:

    {"format": "ringdisperse-trace-v1", "scenario": {...}, "ruleset": "..."}
    {"round": 0, "phase": 1, "rip": 1, "moves": [[label, from, to, port], ...],
     "occ": [...], "obs": {"<label>": [alone, increase, decrease]}}

The ``obs`` key appears only under --verbose.

Exit codes: 0 dispersed / no violations, 2 livelock, 3 budget exceeded,
4 invalid input, 1 verification violations.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import RunOutcome, RunResult, Trace, run
from .perception import observe
from .protocol import Ruleset
from .ring import move_target
from .scenario import Scenario, ScenarioError, load_scenario, render_scenario
from .sweep import SweepSpec, fit_rounds, rows_to_csv, run_sweep
from .verify import exhaustive_search, worker_count

TRACE_FORMAT = "ringdisperse-trace-v1"

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_LIVELOCK = 2
EXIT_BUDGET = 3
EXIT_INPUT = 4

_RESULT_EXIT = {
    RunResult.DISPERSED: EXIT_OK,
    RunResult.LIVELOCK: EXIT_LIVELOCK,
    RunResult.BUDGET_EXCEEDED: EXIT_BUDGET,
}


def _scenario_json(scenario: Scenario) -> dict:
    return {
        "n": scenario.n,
        "max_label": scenario.max_label,
        "robots": [[label, node] for label, node in scenario.robots],
    }


def write_trace(outcome: RunOutcome, path, verbose: bool = False) -> None:
    trace = outcome.trace
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": TRACE_FORMAT,
            "scenario": _scenario_json(trace.scenario),
            "ruleset": trace.ruleset.value,
            "result": outcome.result.value,
            "rounds": outcome.rounds_used,
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for record in trace.records:
            row = {
                "round": record.global_round,
                "phase": record.phase,
                "rip": record.round_in_phase,
                "moves": [list(move) for move in record.moves],
                "occ": list(record.occupancy),
            }
            if verbose:
                row["obs"] = {
                    str(label): [obs.alone, obs.increase, obs.decrease]
                    for label, obs in sorted(record.observations.items())
                }
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def read_trace(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty trace file")
    header = json.loads(lines[0])
    if header.get("format") != TRACE_FORMAT:
        raise ValueError(f"unsupported trace format {header.get('format')!r}")
    return header, [json.loads(line) for line in lines[1:]]


def verify_trace_file(header: dict, rows: list[dict], scenario: Scenario) -> list[str]:
    """File-level validation: move legality, occupancy replay, and, when
    the trace is verbose, perception replay."""
    problems: list[str] = []
    n = scenario.n
    position = {label: node for label, node in scenario.robots}
    if header.get("scenario") != _scenario_json(scenario):
        problems.append("trace header scenario differs from the scenario file")
    prev_counts = {
        label: sum(1 for v in position.values() if v == node)
        for label, node in position.items()
    }
    moved_last: set[int] = set()
    expected_round = 0
    for row in rows:
        if row["round"] != expected_round:
            problems.append(f"round {row['round']}: expected round {expected_round}")
        expected_round = row["round"] + 1
        if "obs" in row:
            for label_str, (alone, inc, dec) in sorted(row["obs"].items()):
                label = int(label_str)
                node = position[label]
                count = sum(1 for v in position.values() if v == node)
                expect = observe(count, prev_counts[label], label in moved_last, row["rip"])
                if (alone, inc, dec) != (expect.alone, expect.increase, expect.decrease):
                    problems.append(
                        f"round {row['round']}: robot {label} observation "
                        f"({alone},{inc},{dec}) != replayed "
                        f"({expect.alone},{expect.increase},{expect.decrease})"
                    )
        counts_now = {
            label: sum(1 for v in position.values() if v == position[label])
            for label in position
        }
        moving: set[int] = set()
        for label, frm, to, port in row["moves"]:
            if label not in position:
                problems.append(f"round {row['round']}: unknown robot {label}")
                continue
            if frm != position[label]:
                problems.append(
                    f"round {row['round']}: robot {label} moves from {frm} "
                    f"but is at {position[label]}"
                )
            if to != move_target(n, frm, port):
                problems.append(
                    f"round {row['round']}: robot {label} claims {frm}->{to} "
                    f"via port {port}"
                )
            position[label] = to
            moving.add(label)
        occ = [sum(1 for v in position.values() if v == node) for node in range(n)]
        if occ != row.get("occ", occ):
            problems.append(f"round {row['round']}: occupancy mismatch")
        prev_counts = counts_now
        moved_last = moving
    return problems


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, ScenarioError) as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    ruleset = Ruleset(args.ruleset)
    outcome = run(scenario, ruleset, max_phases=args.max_phases)
    print(
        f"{outcome.result.value}: {outcome.rounds_used} rounds "
        f"({outcome.phases_used} phases), ruleset {ruleset.value}"
    )
    if outcome.dispersed:
        final = outcome.final_placement.by_robot
        placed = " ".join(f"{label}@{node}" for label, node in sorted(final.items()))
        print(f"final placement: {placed}")
    if args.trace:
        write_trace(outcome, args.trace, verbose=args.verbose)
        print(f"trace written to {args.trace}")
    return _RESULT_EXIT[outcome.result]


def _cmd_sweep(args) -> int:
    points = tuple(range(args.start, args.stop + 1, args.step))
    spec = SweepSpec(
        vary=args.vary,
        points=points,
        n=args.n,
        k=args.k,
        max_label=args.maxlabel,
        seeds=args.seeds,
        ruleset=Ruleset(args.ruleset),
    )
    rows = run_sweep(spec)
    csv_text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"{len(rows)} rows written to {args.out}")
    else:
        sys.stdout.write(csv_text)
    try:
        fit = fit_rounds(rows)
        print(fit.describe())
    except ValueError:
        print("no fit: not enough dispersed rows")
    return EXIT_OK


def _cmd_search(args) -> int:
    ruleset = Ruleset(args.ruleset)
    try:
        report = exhaustive_search(args.n_max, args.k_max, args.l_max, ruleset)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(report.render())
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(report.render() + "\n", encoding="utf-8")
        for idx, (outcome, minimized) in enumerate(report.failures):
            path = out_dir / f"finding-{idx:04d}.scn"
            body = render_scenario(minimized)
            kinds = ",".join(outcome.finding_kinds) or "none"
            path.write_text(
                f"# outcome: {outcome.result.value}\n# findings: {kinds}\n{body}",
                encoding="utf-8",
            )
        print(f"report and {len(report.failures)} finding files in {out_dir}")
    return EXIT_OK if report.validation_violations == 0 else EXIT_VIOLATIONS


def _cmd_verify(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        header, rows = read_trace(args.trace)
    except (OSError, ScenarioError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    problems = verify_trace_file(header, rows, scenario)
    for problem in problems:
        print(f"violation: {problem}")
    print(f"{len(problems)} violations")
    return EXIT_OK if not problems else EXIT_VIOLATIONS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringdisperse",
        description="simulate and verify silent-robot dispersion on an oriented ring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--ruleset", choices=["literal", "repaired"], default="repaired")
    p_run.add_argument("--max-phases", type=int, default=None)
    p_run.add_argument("--trace", default=None)
    p_run.add_argument("--verbose", action="store_true",
                       help="include per-robot perception flags in the trace")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over seeded runs")
    p_sweep.add_argument("--vary", choices=["k", "L", "n"], required=True)
    p_sweep.add_argument("--from", dest="start", type=int, required=True)
    p_sweep.add_argument("--to", dest="stop", type=int, required=True)
    p_sweep.add_argument("--step", type=int, default=1)
    p_sweep.add_argument("--seeds", type=int, default=5)
    p_sweep.add_argument("--n", type=int, default=10)
    p_sweep.add_argument("--k", type=int, default=4)
    p_sweep.add_argument("--maxlabel", type=int, default=15)
    p_sweep.add_argument("--ruleset", choices=["literal", "repaired"], default="repaired")
    p_sweep.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_search = sub.add_parser("search", help="exhaustively run all small instances")
    p_search.add_argument("--n-max", type=int, required=True)
    p_search.add_argument("--k-max", type=int, required=True)
    p_search.add_argument("--l-max", type=int, required=True)
    p_search.add_argument("--ruleset", choices=["literal", "repaired"], default="repaired")
    p_search.add_argument("--out-dir", default=None)
    p_search.set_defaults(func=_cmd_search)

    p_verify = sub.add_parser("verify", help="validate a trace file against the model")
    p_verify.add_argument("--trace", required=True)
    p_verify.add_argument("--scenario", required=True)
    p_verify.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
