"""Scenario files, seeded batch trials, metrics and trace emission.

A scenario is a JSON file naming a domain and problem (paths relative to
the scenario file), the executive to run, the perception mode, primitive
overrides, initial-condition randomisation, scripted disturbances and the
trial protocol.  Trial ``i`` runs with seed ``base_seed + i``, split into
three named streams (sim, perception, primitives), so identical scenario
plus seed means byte-identical metrics and traces.

Each trial plans from the perception pipeline's estimate of the sampled
initial world (the estimator window is warmed up first), builds the robust
chain, and hands control to the executive.  There is no replanning: a trial
whose initial estimate yields no plan is recorded as ``no_plan``.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Optional

import numpy as np

from . import executive as exe
from .chains import build_chain
from .kitchen import (
    InitialConfig,
    KitchenSim,
    PrimitiveSpec,
    merge_primitive_config,
    sample_initial,
)
from .lang import load_domain_file, load_problem_file
from .perception import NoiseModel, PerceptionPipeline
from .planner import GroundedDomain, ground, plan

FORMAT_VERSION = 1

_EXECUTIVES = ("reactive", "open_loop")
_PERCEPTION_MODES = ("oracle", "noisy")
_TRIGGER_KEYS = ("at_tick", "when_operator", "when_predicate")
_DISTURBANCE_KINDS = ("teleport_object", "set_drawer", "detach_gripper")


@dataclass
class Scenario:
    name: str
    path: Optional[Path]
    raw: dict
    grounded: GroundedDomain
    executive: str
    noise: NoiseModel
    window: int
    primitives: dict[str, PrimitiveSpec]
    initial: InitialConfig
    disturbances: list[dict]  # validated {"trigger": ..., "kind": ...} specs
    goal_streak: int
    stuck_after: int
    max_ticks: int
    trials: int
    base_seed: int
    optimal_planning: bool

    @property
    def config_digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True).encode()
        return hashlib.sha256(canon).hexdigest()[:16]


@dataclass
class TrialRecord:
    trial: int
    seed: int
    status: str  # succeeded | stuck | budget_exhausted | no_plan
    ticks: int
    recoveries: int
    false_success: bool
    operator_history: list[str] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return self.status == "succeeded"

    def to_json_dict(self) -> dict:
        return {
            "trial": self.trial,
            "seed": self.seed,
            "status": self.status,
            "ticks": self.ticks,
            "recoveries": self.recoveries,
            "false_success": self.false_success,
            "operator_history": self.operator_history,
        }


@dataclass
class Metrics:
    scenario: str
    trials: int
    success_rate: float
    mean_ticks: Optional[float]  # successes only; None without successes
    recovery_rate: float  # fraction of trials with at least one recovery
    false_success_rate: float

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "trials": self.trials,
            "success_rate": self.success_rate,
            "mean_ticks": self.mean_ticks,
            "recovery_rate": self.recovery_rate,
            "false_success_rate": self.false_success_rate,
        }


class ScenarioError(ValueError):
    """Scenario file failed validation; ``problems`` lists field paths."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


def load_scenario(path: str | Path, overrides: Optional[dict] = None) -> Scenario:
    """Load, validate and ground a scenario file.

    ``overrides`` is merged over the raw JSON before validation (used by
    the CLI flags and the acceptance suite for trial-count or primitive
    overrides)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise ScenarioError([f"{path}: {err}"]) from err
    if overrides:
        raw = _deep_merge(raw, overrides)
    return build_scenario(raw, base_dir=path.parent, name=path.stem, path=path)


def _deep_merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def build_scenario(
    raw: dict,
    base_dir: Path,
    name: str = "scenario",
    path: Optional[Path] = None,
) -> Scenario:
    problems: list[str] = []

    def need(field_name: str, kind, default=None, required=False):
        if field_name not in raw:
            if required:
                problems.append(f"missing required field {field_name!r}")
            return default
        value = raw[field_name]
        if kind is int and isinstance(value, bool):
            problems.append(f"field {field_name!r} must be {kind.__name__}")
            return default
        if not isinstance(value, kind):
            problems.append(f"field {field_name!r} must be {kind.__name__}")
            return default
        return value

    domain_rel = need("domain", str, required=True)
    problem_rel = need("problem", str, required=True)
    max_ticks = need("max_ticks", int, required=True)
    trials = need("trials", int, required=True)
    base_seed = need("base_seed", int, required=True)
    executive = need("executive", str, default="reactive")
    goal_streak = need("goal_streak", int, default=exe.DEFAULT_GOAL_STREAK)
    stuck_after = need("stuck_after", int, default=exe.DEFAULT_STUCK_AFTER)

    if executive not in _EXECUTIVES:
        problems.append(f"field 'executive' must be one of {_EXECUTIVES}")
    if trials is not None and trials < 1:
        problems.append("field 'trials' must be at least 1")
    if max_ticks is not None and max_ticks < 1:
        problems.append("field 'max_ticks' must be at least 1")

    perception = raw.get("perception", {"mode": "oracle"})
    noise = NoiseModel()
    window = 3
    if not isinstance(perception, dict):
        problems.append("field 'perception' must be an object")
    else:
        mode = perception.get("mode", "oracle")
        if mode not in _PERCEPTION_MODES:
            problems.append(f"field 'perception.mode' must be one of {_PERCEPTION_MODES}")
        window = int(perception.get("window", 3))
        if window < 1:
            problems.append("field 'perception.window' must be at least 1")
        if mode == "noisy":
            try:
                noise = NoiseModel(
                    default_flip=float(perception.get("default_flip", 0.05)),
                    per_predicate_flip={
                        str(k): float(v)
                        for k, v in perception.get("per_predicate_flip", {}).items()
                    },
                )
            except ValueError as err:
                problems.append(f"field 'perception': {err}")

    primitives_raw = raw.get("primitives", {})
    if not isinstance(primitives_raw, dict):
        problems.append("field 'primitives' must be an object")
        primitives_raw = {}
    primitives = merge_primitive_config(primitives_raw)

    initial_raw = raw.get("initial", {})
    initial = InitialConfig()
    if not isinstance(initial_raw, dict):
        problems.append("field 'initial' must be an object")
    else:
        try:
            initial = InitialConfig(
                objects=initial_raw.get("objects", "counter_only"),
                drawer=initial_raw.get("drawer", "closed"),
                arm=initial_raw.get("arm", "random"),
                gripper_open_prob=float(initial_raw.get("gripper_open_prob", 1.0)),
                drawer_open_prob=float(initial_raw.get("drawer_open_prob", 0.5)),
                object_in_drawer_prob=float(
                    initial_raw.get("object_in_drawer_prob", 0.2)
                ),
            )
        except (TypeError, ValueError) as err:
            problems.append(f"field 'initial': {err}")
        if initial.objects not in ("counter_only", "anywhere"):
            problems.append("field 'initial.objects' must be counter_only or anywhere")
        if initial.drawer not in ("closed", "open", "mixed"):
            problems.append("field 'initial.drawer' must be closed, open or mixed")
        if initial.arm not in ("driving", "above", "random"):
            problems.append("field 'initial.arm' must be driving, above or random")

    planner_raw = raw.get("planner", {})
    optimal_planning = bool(planner_raw.get("optimal", False)) if isinstance(
        planner_raw, dict
    ) else False
    if not isinstance(planner_raw, dict):
        problems.append("field 'planner' must be an object")

    grounded = None
    if domain_rel and problem_rel:
        domain_path = (base_dir / domain_rel).resolve()
        problem_path = (base_dir / problem_rel).resolve()
        if not domain_path.is_file():
            problems.append(f"field 'domain': no such file {domain_path}")
        elif not problem_path.is_file():
            problems.append(f"field 'problem': no such file {problem_path}")
        else:
            dres = load_domain_file(str(domain_path))
            if not dres.ok:
                problems.extend(f"domain: {d}" for d in dres.diagnostics)
            else:
                pres = load_problem_file(str(problem_path), dres.value)
                if not pres.ok:
                    problems.extend(f"problem: {d}" for d in pres.diagnostics)
                else:
                    grounded = ground(dres.value, pres.value)

    disturbances = raw.get("disturbances", [])
    if not isinstance(disturbances, list):
        problems.append("field 'disturbances' must be a list")
        disturbances = []
    validated_disturbances: list[dict] = []
    for i, dist in enumerate(disturbances):
        where = f"disturbances[{i}]"
        if not isinstance(dist, dict) or "trigger" not in dist or "kind" not in dist:
            problems.append(f"field '{where}' must have 'trigger' and 'kind'")
            continue
        trigger = dist["trigger"]
        if not isinstance(trigger, dict) or len(
            set(trigger) & set(_TRIGGER_KEYS)
        ) != 1:
            problems.append(
                f"field '{where}.trigger' must have exactly one of {_TRIGGER_KEYS}"
            )
            continue
        kind = dist["kind"]
        if not isinstance(kind, dict) or kind.get("kind") not in _DISTURBANCE_KINDS:
            problems.append(
                f"field '{where}.kind.kind' must be one of {_DISTURBANCE_KINDS}"
            )
            continue
        if kind["kind"] == "teleport_object" and "object" not in kind:
            problems.append(f"field '{where}.kind' is missing 'object'")
            continue
        if kind["kind"] == "set_drawer" and "extension" not in kind:
            problems.append(f"field '{where}.kind' is missing 'extension'")
            continue
        if grounded is not None:
            err = _check_disturbance_refs(trigger, kind, grounded, where)
            if err:
                problems.append(err)
                continue
        validated_disturbances.append({"trigger": trigger, "kind": kind})

    if problems:
        raise ScenarioError(problems)

    return Scenario(
        name=str(raw.get("name", name)),
        path=path,
        raw=raw,
        grounded=grounded,
        executive=executive,
        noise=noise,
        window=window,
        primitives=primitives,
        initial=initial,
        disturbances=validated_disturbances,
        goal_streak=goal_streak,
        stuck_after=stuck_after,
        max_ticks=max_ticks,
        trials=trials,
        base_seed=base_seed,
        optimal_planning=optimal_planning,
    )


def _check_disturbance_refs(trigger, kind, grounded, where) -> Optional[str]:
    from .chains import _atom_from_name
    from .logic import UnknownAtomError

    if "when_operator" in trigger:
        want = str(trigger["when_operator"]).split("(", 1)[0]
        if not any(op.schema.name == want for op in grounded.operators):
            return f"field '{where}.trigger': unknown operator {want!r}"
    if "when_predicate" in trigger:
        try:
            _atom_from_name(grounded.vocabulary, str(trigger["when_predicate"]))
        except UnknownAtomError:
            return (
                f"field '{where}.trigger': unknown atom "
                f"{trigger['when_predicate']!r}"
            )
    if kind["kind"] == "teleport_object":
        movables = {
            sym
            for sym, t in grounded.problem.objects.items()
            if grounded.domain.is_subtype(t, "movable")
        }
        if kind["object"] not in movables:
            return f"field '{where}.kind': unknown object {kind['object']!r}"
    return None


# --------------------------------------------------------------------------
# Trial execution
# --------------------------------------------------------------------------


def run_trial(
    scenario: Scenario, index: int, trace_sink: Optional[IO[str]] = None
) -> TrialRecord:
    """Run one seeded trial; the sink, when given, receives the JSONL trace."""
    seed = scenario.base_seed + index
    sim_ss, perc_ss, prim_ss = np.random.SeedSequence(seed).spawn(3)
    sim_rng = np.random.default_rng(sim_ss)
    perc_rng = np.random.default_rng(perc_ss)
    prim_rng = np.random.default_rng(prim_ss)

    grounded = scenario.grounded
    movables = tuple(
        sym
        for sym, t in grounded.problem.objects.items()
        if grounded.domain.is_subtype(t, "movable")
    )
    world = sample_initial(scenario.initial, movables, sim_rng)
    sim = KitchenSim(
        grounded, world, scenario.primitives, rng=prim_rng, world_rng=sim_rng
    )
    pipeline = PerceptionPipeline(
        grounded.vocabulary, scenario.noise, scenario.window, perc_rng
    )

    writer = (
        _TraceWriter(trace_sink, scenario, seed, world) if trace_sink else None
    )
    on_tick = writer.on_tick if writer else None

    # Warm the estimator window on the initial world, then plan from the
    # filtered estimate (the executive never replans).
    estimate = pipeline.estimate(sim.eval_predicates())
    for _ in range(scenario.window - 1):
        estimate = pipeline.estimate(sim.eval_predicates())

    plan_result = plan(
        grounded, init=estimate, goal=grounded.goal,
        optimal=scenario.optimal_planning,
    )
    if not plan_result.solved:
        record = TrialRecord(
            trial=index, seed=seed, status="no_plan", ticks=0,
            recoveries=0, false_success=False,
        )
        if writer:
            writer.finish(record)
        return record

    chain = build_chain(plan_result.plan, grounded.goal)
    disturbances = [
        exe.Disturbance(trigger=d["trigger"], kind=d["kind"])
        for d in scenario.disturbances
    ]

    if scenario.executive == "reactive":
        outcome = exe.run(
            sim,
            pipeline,
            chain,
            max_ticks=scenario.max_ticks,
            goal_streak=scenario.goal_streak,
            stuck_after=scenario.stuck_after,
            disturbances=disturbances,
            on_tick=on_tick,
        )
    else:
        outcome = exe.run_open_loop(
            sim, chain, max_ticks=scenario.max_ticks,
            disturbances=disturbances, on_tick=on_tick,
        )

    record = TrialRecord(
        trial=index,
        seed=seed,
        status=outcome.status,
        ticks=outcome.ticks,
        recoveries=outcome.recoveries,
        false_success=outcome.false_success,
        operator_history=[name for _, _, name in outcome.history],
    )
    if writer:
        writer.finish(record)
    return record


class _TraceWriter:
    """One JSONL line per tick, bracketed by a header and an outcome line."""

    def __init__(self, sink: IO[str], scenario: Scenario, seed: int, world):
        self.sink = sink
        self._write(
            {
                "type": "header",
                "format_version": FORMAT_VERSION,
                "scenario": scenario.name,
                "config_digest": scenario.config_digest,
                "seed": seed,
                "initial_world": world.to_json_dict(),
            }
        )

    def _write(self, payload: dict) -> None:
        self.sink.write(json.dumps(payload, sort_keys=True) + "\n")

    def on_tick(self, record: dict) -> None:
        self._write({"type": "tick", **record})

    def finish(self, record: TrialRecord) -> None:
        self._write({"type": "outcome", **record.to_json_dict()})


def compute_metrics(scenario_name: str, records: list[TrialRecord]) -> Metrics:
    n = len(records)
    successes = [r for r in records if r.succeeded]
    return Metrics(
        scenario=scenario_name,
        trials=n,
        success_rate=len(successes) / n,
        mean_ticks=(
            sum(r.ticks for r in successes) / len(successes) if successes else None
        ),
        recovery_rate=sum(1 for r in records if r.recoveries > 0) / n,
        false_success_rate=sum(1 for r in records if r.false_success) / n,
    )


def run_trials(
    scenario: Scenario,
    jobs: int = 1,
    trace_dir: Optional[Path] = None,
) -> tuple[Metrics, list[TrialRecord]]:
    """Execute all trials; results are ordered by trial index regardless of
    worker scheduling, so parallel runs aggregate identically."""
    indices = list(range(scenario.trials))
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)

    def trial_with_trace(i: int) -> TrialRecord:
        if trace_dir is None:
            return run_trial(scenario, i)
        trace_path = trace_dir / f"{scenario.name}_trial{i:04d}.jsonl"
        with open(trace_path, "w", encoding="utf-8") as sink:
            return run_trial(scenario, i, trace_sink=sink)

    if jobs <= 1:
        records = [trial_with_trace(i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(
                pool.map(_parallel_trial, [(scenario, i, trace_dir) for i in indices])
            )
    return compute_metrics(scenario.name, records), records


def _parallel_trial(args) -> TrialRecord:
    scenario, index, trace_dir = args
    if trace_dir is None:
        return run_trial(scenario, index)
    trace_path = Path(trace_dir) / f"{scenario.name}_trial{index:04d}.jsonl"
    with open(trace_path, "w", encoding="utf-8") as sink:
        return run_trial(scenario, index, trace_sink=sink)


def report(metrics_list: list[Metrics]) -> str:
    """Aligned comparison table over one row per scenario."""
    if not metrics_list:
        raise ValueError("no metrics to report")
    headers = [
        "scenario", "trials", "success", "mean_ticks", "recoveries", "false_succ",
    ]
    rows = []
    for m in metrics_list:
        rows.append(
            [
                m.scenario,
                str(m.trials),
                f"{m.success_rate * 100:.1f}%",
                "-" if m.mean_ticks is None else f"{m.mean_ticks:.1f}",
                f"{m.recovery_rate * 100:.1f}%",
                f"{m.false_success_rate * 100:.1f}%",
            ]
        )
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows))
        for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[c]) for c, h in enumerate(headers)),
        "  ".join("-" * widths[c] for c in range(len(headers))),
    ]
    for r in rows:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in range(len(headers))))
    return "\n".join(lines)
