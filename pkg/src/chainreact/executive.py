"""Reactive execution of a robust chain against the simulator.

Each tick the executive estimates the logical state, scans the chain from
the highest-priority step (the last) downward, and picks the first step
whose effective entry conditions hold, or stays with the current step while
its effective run conditions hold.  Selecting a different step preempts the
running primitive immediately.  Success is declared once the goal has held
in the estimate for a configurable streak of consecutive ticks, which
guards against single-tick perception noise; a streak of 1 reproduces the
bare loop.

``run_open_loop`` is the non-reactive baseline: it executes the chain
steps strictly in order, advancing on primitive completion whether or not
the step achieved anything, and never re-selects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .chains import Chain
from .kitchen import KitchenSim
from .logic import LogicalState, goal_satisfied, holds
from .perception import PerceptionPipeline

ENTER_NEW = "enter_new"
CONTINUE_CURRENT = "continue_current"
NONE_ENTERABLE = "none_enterable"

DEFAULT_GOAL_STREAK = 3
DEFAULT_STUCK_AFTER = 10


@dataclass(frozen=True)
class Decision:
    selected: Optional[int]
    reason: str

    def __post_init__(self) -> None:
        if (self.selected is None) != (self.reason == NONE_ENTERABLE):
            raise ValueError("selected must be set iff a step was chosen")


def select_operator(
    chain: Chain, estimate: LogicalState, current: Optional[int]
) -> Decision:
    """Highest-priority-first selection.

    Scanning from the last step down: a non-current step is entered when
    its effective preconditions hold; the current step continues when its
    effective run conditions hold.  The first match wins.
    """
    for i in range(len(chain.steps) - 1, -1, -1):
        step = chain.steps[i]
        if i != current:
            if holds(estimate, step.effective_pre):
                return Decision(i, ENTER_NEW)
        elif holds(estimate, step.effective_run):
            return Decision(i, CONTINUE_CURRENT)
    return Decision(None, NONE_ENTERABLE)


@dataclass
class Disturbance:
    """A scripted world change with a one-shot trigger.

    trigger: {"at_tick": int} or {"when_operator": "name" | "name(args)"}
             or {"when_predicate": "atom"}
    kind:    {"kind": "teleport_object", "object": o, "destination": ...}
             or {"kind": "set_drawer", "extension": x}
             or {"kind": "detach_gripper"}
    """

    trigger: dict
    kind: dict
    fired: bool = False

    def matches(
        self, tick: int, started_op: Optional[str], truth: LogicalState
    ) -> bool:
        if self.fired:
            return False
        if "at_tick" in self.trigger:
            return tick == int(self.trigger["at_tick"])
        if "when_operator" in self.trigger:
            want = self.trigger["when_operator"]
            if started_op is None:
                return False
            return started_op == want or started_op.split("(", 1)[0] == want
        if "when_predicate" in self.trigger:
            name = self.trigger["when_predicate"]
            return name in set(truth.sorted_names())
        raise ValueError(f"unknown trigger {self.trigger!r}")


@dataclass
class ExecutiveState:
    """Loop state: which chain step is active and how the episode stands."""

    chain: Chain
    current: Optional[int] = None  # active step index, if any
    tick: int = 0
    goal_streak: int = 0
    status: str = "running"  # running | succeeded | stuck | budget_exhausted


@dataclass
class Outcome:
    status: str  # "succeeded" | "stuck" | "budget_exhausted"
    ticks: int
    recoveries: int = 0
    false_success: bool = False
    # one entry per primitive start: (tick, step index, operator name)
    history: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return self.status == "succeeded"


TickCallback = Callable[[dict], None]


def _fire_disturbances(
    sim: KitchenSim,
    disturbances: Sequence[Disturbance],
    tick: int,
    started_op: Optional[str],
) -> list[str]:
    fired = []
    if not disturbances:
        return fired
    truth = sim.eval_predicates()
    for d in disturbances:
        if d.matches(tick, started_op, truth):
            sim.apply_disturbance(d.kind)
            d.fired = True
            fired.append(d.kind["kind"])
    return fired


def run(
    sim: KitchenSim,
    perception: PerceptionPipeline,
    chain: Chain,
    max_ticks: int,
    goal_streak: int = DEFAULT_GOAL_STREAK,
    stuck_after: int = DEFAULT_STUCK_AFTER,
    disturbances: Sequence[Disturbance] = (),
    on_tick: Optional[TickCallback] = None,
) -> Outcome:
    """Run the reactive loop until the goal streak, a dead end, or the
    tick budget ends the episode."""
    goal = chain.goal
    st = ExecutiveState(chain)
    last_entered: Optional[int] = None
    none_streak = 0
    outcome = Outcome(status="budget_exhausted", ticks=max_ticks)

    for tick in range(max_ticks):
        st.tick = tick
        truth = sim.eval_predicates()
        estimate = perception.estimate(truth)

        if goal_satisfied(estimate, goal):
            st.goal_streak += 1
        else:
            st.goal_streak = 0
        if st.goal_streak >= goal_streak:
            st.status = outcome.status = "succeeded"
            outcome.ticks = tick + 1
            outcome.false_success = not goal_satisfied(truth, goal)
            _emit(chain, on_tick, tick, truth, estimate, None, "goal_reached", [])
            return outcome
        if st.goal_streak > 0:
            # The estimate says the goal holds; hold position while the
            # streak confirms it.  A running primitive finishes its motion.
            prim = sim.tick() if sim.current is not None else None
            fired = _fire_disturbances(sim, disturbances, tick, None)
            _emit(chain, on_tick, tick, truth, estimate, None,
                  prim.phase if prim else "confirming", fired)
            continue

        decision = select_operator(chain, estimate, st.current)
        started_op: Optional[str] = None
        prim = None

        if decision.reason == NONE_ENTERABLE:
            none_streak += 1
            if sim.current is not None:
                sim.abort_primitive()
            st.current = None
            if none_streak >= stuck_after:
                st.status = outcome.status = "stuck"
                outcome.ticks = tick + 1
                _emit(chain, on_tick, tick, truth, estimate, decision, "idle", [])
                return outcome
        else:
            none_streak = 0
            idx = decision.selected
            if decision.reason == ENTER_NEW:
                if sim.current is not None:
                    sim.abort_primitive()
                sim.start_primitive(chain.steps[idx].base)
                started_op = chain.steps[idx].base.name
                outcome.history.append((tick, idx, started_op))
                if last_entered is not None and idx < last_entered:
                    outcome.recoveries += 1
                last_entered = idx
                st.current = idx
            elif sim.current is None:
                # The primitive ended (success or failure) but this step is
                # still the best choice: dispatch it again (retry).
                sim.start_primitive(chain.steps[idx].base)
                started_op = chain.steps[idx].base.name
                outcome.history.append((tick, idx, started_op))
            prim = sim.tick()

        fired = _fire_disturbances(sim, disturbances, tick, started_op)
        _emit(chain, on_tick, tick, truth, estimate, decision,
              prim.phase if prim else "idle", fired)

    st.status = "budget_exhausted"
    return outcome


def run_open_loop(
    sim: KitchenSim,
    chain: Chain,
    max_ticks: int,
    disturbances: Sequence[Disturbance] = (),
    on_tick: Optional[TickCallback] = None,
) -> Outcome:
    """Execute the chain strictly in order, advancing on completion, never
    checking conditions and never re-selecting.  Ends stuck if the goal is
    untrue after the last step."""
    outcome = Outcome(status="budget_exhausted", ticks=max_ticks)
    step_iter = iter(range(len(chain.steps)))
    idx: Optional[int] = None

    for tick in range(max_ticks):
        truth = sim.eval_predicates()
        started_op: Optional[str] = None
        if sim.current is None:
            idx = next(step_iter, None)
            if idx is None:
                done = goal_satisfied(truth, chain.goal)
                outcome.status = "succeeded" if done else "stuck"
                outcome.ticks = tick
                _emit(chain, on_tick, tick, truth, truth, None,
                      "goal_reached" if done else "idle", [])
                return outcome
            sim.start_primitive(chain.steps[idx].base)
            started_op = chain.steps[idx].base.name
            outcome.history.append((tick, idx, started_op))
        prim = sim.tick()
        fired = _fire_disturbances(sim, disturbances, tick, started_op)
        _emit(chain, on_tick, tick, truth, truth, None,
              prim.phase if prim else "idle", fired)

    return outcome


def _emit(chain, on_tick, tick, truth, estimate, decision, phase, fired) -> None:
    if on_tick is None:
        return
    selected = None if decision is None else decision.selected
    on_tick(
        {
            "tick": tick,
            "true_atoms": truth.sorted_names(),
            "estimated_atoms": estimate.sorted_names(),
            "selected_step": selected,
            "selected_operator": (
                None if selected is None else chain.steps[selected].base.name
            ),
            "reason": None if decision is None else decision.reason,
            "primitive_phase": phase,
            "disturbances_fired": fired,
        }
    )
