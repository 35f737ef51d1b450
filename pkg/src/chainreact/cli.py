"""Command line interface.

Subcommands:
  plan     search for an operator sequence and write plan.json (an ordered
           array of {operator, args})
  chain    turn plan.json into chain.json with the propagated extra
           conditions per step
  execute  run one seeded trial of a scenario, optionally tracing each tick
  bench    run the full trial protocol for one or more scenarios
  report   print the comparison table for a saved results file

Exit codes: 0 success, 1 failed run or invariant, 2 input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chains import build_chain
from .harness import (
    Metrics,
    ScenarioError,
    load_scenario,
    report,
    run_trial,
    run_trials,
)
from .lang import load_domain_file, load_problem_file
from .planner import Plan, ground, plan

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


def _load_ground(domain_path: str, problem_path: str):
    dres = load_domain_file(domain_path)
    if not dres.ok:
        for diag in dres.diagnostics:
            print(f"{domain_path}:{diag}", file=sys.stderr)
        return None
    pres = load_problem_file(problem_path, dres.value)
    if not pres.ok:
        for diag in pres.diagnostics:
            print(f"{problem_path}:{diag}", file=sys.stderr)
        return None
    return ground(dres.value, pres.value)


def cmd_plan(args) -> int:
    grounded = _load_ground(args.domain, args.problem)
    if grounded is None:
        return EXIT_INPUT
    result = plan(grounded, optimal=args.optimal)
    if result.status == "unsolvable":
        print("unsolvable", file=sys.stderr)
        return EXIT_FAILED
    if result.status == "budget_exhausted":
        print("node budget exhausted before a plan was found", file=sys.stderr)
        return EXIT_FAILED
    steps = result.plan.to_json_dict()["steps"]
    out = json.dumps(steps, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    print(f"plan: {len(steps)} steps", file=sys.stderr)
    return EXIT_OK


def cmd_chain(args) -> int:
    grounded = _load_ground(args.domain, args.problem)
    if grounded is None:
        return EXIT_INPUT
    try:
        steps_json = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        print(f"{args.plan}: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        steps = tuple(
            grounded.operator_named(s["operator"], tuple(s.get("args", ())))
            for s in steps_json
        )
        the_plan = Plan(steps, grounded.init, grounded.goal)
        chain = build_chain(the_plan, grounded.goal)
    except (KeyError, TypeError) as err:
        print(f"{args.plan}: bad plan step: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as err:
        print(f"plan is not sound for this problem: {err}", file=sys.stderr)
        return EXIT_FAILED
    out = json.dumps(chain.to_json_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_execute(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    try:
        scenario = load_scenario(args.scenario, overrides or None)
    except ScenarioError as err:
        for problem in err.problems:
            print(f"{args.scenario}: {problem}", file=sys.stderr)
        return EXIT_INPUT
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as sink:
            record = run_trial(scenario, 0, trace_sink=sink)
    else:
        record = run_trial(scenario, 0)
    print(json.dumps(record.to_json_dict(), sort_keys=True))
    return EXIT_OK if record.succeeded else EXIT_FAILED


def cmd_bench(args) -> int:
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    results = []
    metrics_list = []
    for path in args.scenarios:
        try:
            scenario = load_scenario(path, overrides or None)
        except ScenarioError as err:
            for problem in err.problems:
                print(f"{path}: {problem}", file=sys.stderr)
            return EXIT_INPUT
        metrics, records = run_trials(
            scenario, jobs=args.jobs,
            trace_dir=Path(args.trace_dir) if args.trace_dir else None,
        )
        metrics_list.append(metrics)
        results.append(
            {
                "metrics": metrics.to_json_dict(),
                "records": [r.to_json_dict() for r in records],
            }
        )
    payload = {"format_version": 1, "results": results}
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(report(metrics_list))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        payload = json.loads(Path(args.results).read_text(encoding="utf-8"))
        metrics_list = [
            Metrics(**entry["metrics"]) for entry in payload["results"]
        ]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as err:
        print(f"{args.results}: {err}", file=sys.stderr)
        return EXIT_INPUT
    if not metrics_list:
        print("results file holds no metrics", file=sys.stderr)
        return EXIT_INPUT
    print(report(metrics_list))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainreact",
        description="Reactive symbolic planning and execution engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="search for an operator sequence")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--optimal", action="store_true",
                   help="exhaustive breadth-first search (optimal step count)")
    p.add_argument("--out", help="write plan.json here instead of stdout")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("chain", help="build a robust chain from a plan")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--plan", required=True, help="plan.json from the plan command")
    p.add_argument("--out", help="write chain.json here instead of stdout")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("execute", help="run one seeded trial of a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trace", help="write a JSONL tick trace here")
    p.add_argument("--seed", type=int, help="override the scenario base_seed")
    p.set_defaults(func=cmd_execute)

    p = sub.add_parser("bench", help="run the trial protocol for scenarios")
    p.add_argument("--scenarios", nargs="+", required=True)
    p.add_argument("--out", help="write metrics and records JSON here")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    p.add_argument("--trace-dir", help="write per-trial JSONL traces here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="print the table for saved results")
    p.add_argument("--results", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
