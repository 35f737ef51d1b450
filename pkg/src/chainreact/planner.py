"""Grounding and state-space search.

``ground`` enumerates every type-consistent binding of each operator schema
against the problem objects (plus domain constants), interning all ground
atoms into a :class:`~chainreact.logic.Vocabulary`.  ``plan`` then searches
the grounded space: greedy best-first on the delete-relaxation additive
heuristic by default, or exhaustive breadth-first search when ``optimal``
is requested (used wherever exact plan lengths matter).  Tie-breaking is
total (operator index order plus FIFO), so identical inputs always produce
identical plans.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from math import inf, isinf
from typing import Optional

from .lang import DomainDefinition, LiftedAtom, OperatorSchema, ProblemDefinition
from .logic import (
    ConditionSet,
    EffectSet,
    GroundAtom,
    LogicalState,
    Vocabulary,
    apply_effects,
    holds,
)

DEFAULT_GROUND_CAP = 10**6
DEFAULT_NODE_BUDGET = 10**6


class GroundingLimitError(RuntimeError):
    """Grounded operator count exceeded the configured cap."""


@dataclass(frozen=True)
class GroundOperator:
    """A fully bound operator over the grounded vocabulary."""

    index: int
    schema: OperatorSchema
    bound_args: tuple[str, ...]
    pre: ConditionSet
    run: ConditionSet
    eff: EffectSet
    primitive_binding: str

    @property
    def name(self) -> str:
        if not self.bound_args:
            return self.schema.name
        return f"{self.schema.name}({', '.join(self.bound_args)})"

    def __str__(self) -> str:
        return self.name


@dataclass
class GroundedDomain:
    domain: DomainDefinition
    problem: ProblemDefinition
    vocabulary: Vocabulary
    operators: tuple[GroundOperator, ...]
    init: LogicalState
    goal: ConditionSet
    # atom id -> indices of operators whose positive preconditions mention it
    by_precondition: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def operator_named(self, name: str, args: tuple[str, ...] = ()) -> GroundOperator:
        for op in self.operators:
            if op.schema.name == name and op.bound_args == tuple(args):
                return op
        raise KeyError(f"no ground operator {name}{args}")


def _objects_by_type(domain: DomainDefinition, problem: ProblemDefinition) -> dict[str, list[str]]:
    pool = list(domain.constants.items()) + list(problem.objects.items())
    out: dict[str, list[str]] = {t: [] for t in domain.types}
    for symbol, type_name in pool:
        for t in domain.types:
            if domain.is_subtype(type_name, t):
                out[t].append(symbol)
    return out


def _substitute(atom: LiftedAtom, binding: dict[str, str]) -> tuple[str, tuple[str, ...]]:
    return atom.name, tuple(binding.get(a, a) for a in atom.args)


def _bind(vocab: Vocabulary, atom: LiftedAtom, binding: dict[str, str]) -> GroundAtom:
    name, args = _substitute(atom, binding)
    return vocab.get(name, *args)


def ground(
    domain: DomainDefinition,
    problem: ProblemDefinition,
    max_operators: int = DEFAULT_GROUND_CAP,
) -> GroundedDomain:
    """Enumerate the full grounded vocabulary and operator set."""
    by_type = _objects_by_type(domain, problem)

    atoms: list[GroundAtom] = []
    for schema in domain.predicates:
        pools = [by_type.get(t, []) for t in schema.param_types]
        for combo in itertools.product(*pools):
            atoms.append(GroundAtom(schema, combo))
    vocab = Vocabulary(atoms)

    operators: list[GroundOperator] = []
    for schema in domain.operators:
        pools = [by_type.get(t, []) for _, t in schema.params]
        names = [v for v, _ in schema.params]
        for combo in itertools.product(*pools):
            if len(operators) >= max_operators:
                raise GroundingLimitError(
                    f"grounding exceeds {max_operators} operators"
                )
            binding = dict(zip(names, combo))
            pre_pos = [_bind(vocab, l.atom, binding) for l in schema.pre if l.positive]
            pre_neg = [_bind(vocab, l.atom, binding) for l in schema.pre if not l.positive]
            run_src = schema.effective_run
            run_pos = [_bind(vocab, l.atom, binding) for l in run_src if l.positive]
            run_neg = [_bind(vocab, l.atom, binding) for l in run_src if not l.positive]
            adds = [_bind(vocab, a, binding) for a in schema.adds]
            deletes = [_bind(vocab, a, binding) for a in schema.deletes]
            operators.append(
                GroundOperator(
                    index=len(operators),
                    schema=schema,
                    bound_args=combo,
                    pre=ConditionSet.from_atoms(vocab, pre_pos, pre_neg),
                    run=ConditionSet.from_atoms(vocab, run_pos, run_neg),
                    eff=EffectSet.from_atoms(vocab, adds, deletes),
                    primitive_binding=schema.binding,
                )
            )

    by_pre: dict[int, list[int]] = {}
    for op in operators:
        mask = op.pre.pos_mask
        i = 0
        while mask:
            if mask & 1:
                by_pre.setdefault(i, []).append(op.index)
            mask >>= 1
            i += 1

    init = LogicalState.from_atoms(
        vocab, [vocab.get(a.name, *a.args) for a in problem.init]
    )
    goal_pos = [vocab.get(l.atom.name, *l.atom.args) for l in problem.goal if l.positive]
    goal_neg = [vocab.get(l.atom.name, *l.atom.args) for l in problem.goal if not l.positive]
    goal = ConditionSet.from_atoms(vocab, goal_pos, goal_neg)

    return GroundedDomain(
        domain=domain,
        problem=problem,
        vocabulary=vocab,
        operators=tuple(operators),
        init=init,
        goal=goal,
        by_precondition={k: tuple(v) for k, v in by_pre.items()},
    )


# --------------------------------------------------------------------------
# Plans and symbolic execution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Plan:
    """Operator sequence ordered lowest to highest priority (last step is
    closest to the goal).  Soundness is checked at construction."""

    steps: tuple[GroundOperator, ...]
    init: LogicalState
    goal: ConditionSet

    def __post_init__(self) -> None:
        result = symbolic_execute_steps(self.steps, self.init)
        if result.failed_step is not None:
            raise ValueError(f"plan violates preconditions at step {result.failed_step}")
        if not holds(result.state, self.goal):
            raise ValueError("plan does not reach the goal")

    def __len__(self) -> int:
        return len(self.steps)

    def names(self) -> list[str]:
        return [op.name for op in self.steps]

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "steps": [
                {"operator": op.schema.name, "args": list(op.bound_args)}
                for op in self.steps
            ],
        }


def plan_from_json(grounded: GroundedDomain, data: dict,
                   init: Optional[LogicalState] = None,
                   goal: Optional[ConditionSet] = None) -> Plan:
    steps = tuple(
        grounded.operator_named(step["operator"], tuple(step.get("args", ())))
        for step in data["steps"]
    )
    return Plan(
        steps,
        grounded.init if init is None else init,
        grounded.goal if goal is None else goal,
    )


@dataclass(frozen=True)
class ExecutionResult:
    state: LogicalState
    failed_step: Optional[int] = None  # index of first step whose pre failed

    @property
    def ok(self) -> bool:
        return self.failed_step is None


def symbolic_execute_steps(steps, init: LogicalState) -> ExecutionResult:
    state = init
    for i, op in enumerate(steps):
        if not holds(state, op.pre):
            return ExecutionResult(state, failed_step=i)
        state = apply_effects(state, op.eff)
    return ExecutionResult(state)


def symbolic_execute(plan: Plan, init: LogicalState) -> ExecutionResult:
    """Fold effects over the plan, checking each step's preconditions."""
    return symbolic_execute_steps(plan.steps, init)


# --------------------------------------------------------------------------
# Heuristic
# --------------------------------------------------------------------------


def h_add(grounded: GroundedDomain, state: LogicalState, goal: ConditionSet) -> float:
    """Delete-relaxation additive heuristic.

    Returns 0 iff the goal is satisfied in ``state`` and ``inf`` iff the
    positive part of the goal is unreachable under the delete relaxation.
    A violated negative literal with a satisfied positive part costs 1
    (negative literals are otherwise outside the relaxation).
    """
    n = len(grounded.vocabulary)
    cost: list[float] = [inf] * n
    mask = state.mask
    i = 0
    while mask:
        if mask & 1:
            cost[i] = 0.0
        mask >>= 1
        i += 1

    # id tuples per operator are state-independent; computed once per domain
    ops = getattr(grounded, "_hadd_ops", None)
    if ops is None:
        ops = [
            (_mask_ids(op.pre.pos_mask), _mask_ids(op.eff.add_mask))
            for op in grounded.operators
        ]
        grounded._hadd_ops = ops
    changed = True
    while changed:
        changed = False
        for pre_ids, add_ids in ops:
            total = 1.0
            for a in pre_ids:
                c = cost[a]
                if isinf(c):
                    total = inf
                    break
                total += c
            if isinf(total):
                continue
            for b in add_ids:
                if total < cost[b]:
                    cost[b] = total
                    changed = True

    base = 0.0
    for a in _mask_ids(goal.pos_mask):
        c = cost[a]
        if isinf(c):
            return inf
        base += c
    if base == 0.0 and not holds(state, goal):
        return 1.0
    return base


def _mask_ids(mask: int) -> tuple[int, ...]:
    ids = []
    i = 0
    while mask:
        if mask & 1:
            ids.append(i)
        mask >>= 1
        i += 1
    return tuple(ids)


# --------------------------------------------------------------------------
# Search
# --------------------------------------------------------------------------


@dataclass
class PlanResult:
    status: str  # "solved" | "unsolvable" | "budget_exhausted"
    plan: Optional[Plan] = None
    expansions: int = 0

    @property
    def solved(self) -> bool:
        return self.status == "solved"


def plan(
    grounded: GroundedDomain,
    init: Optional[LogicalState] = None,
    goal: Optional[ConditionSet] = None,
    optimal: bool = False,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> PlanResult:
    """Search for an operator sequence from ``init`` to ``goal``.

    Greedy best-first on :func:`h_add` by default; breadth-first (optimal
    in step count) when ``optimal`` is set.  Complete either way: the
    grounded state space is finite and duplicates are eliminated, so
    ``unsolvable`` is returned only when no plan exists.
    """
    init = grounded.init if init is None else init
    goal = grounded.goal if goal is None else goal
    if optimal:
        return _bfs(grounded, init, goal, node_budget)
    return _gbfs(grounded, init, goal, node_budget)


def _extract(grounded, parents, mask, init, goal) -> Plan:
    ops = []
    while mask != init.mask or parents[mask][1] is not None:
        parent_mask, op_idx = parents[mask]
        if op_idx is None:
            break
        ops.append(grounded.operators[op_idx])
        mask = parent_mask
    return Plan(tuple(reversed(ops)), init, goal)


def _bfs(grounded, init, goal, node_budget) -> PlanResult:
    if holds(init, goal):
        return PlanResult("solved", Plan((), init, goal))
    parents: dict[int, tuple[int, Optional[int]]] = {init.mask: (init.mask, None)}
    queue = deque([init])
    expansions = 0
    while queue:
        state = queue.popleft()
        expansions += 1
        if expansions > node_budget:
            return PlanResult("budget_exhausted", expansions=expansions)
        for op in grounded.operators:
            if not holds(state, op.pre):
                continue
            nxt = apply_effects(state, op.eff)
            if nxt.mask in parents:
                continue
            parents[nxt.mask] = (state.mask, op.index)
            if holds(nxt, goal):
                return PlanResult(
                    "solved", _extract(grounded, parents, nxt.mask, init, goal), expansions
                )
            queue.append(nxt)
    return PlanResult("unsolvable", expansions=expansions)


def _gbfs(grounded, init, goal, node_budget) -> PlanResult:
    h0 = h_add(grounded, init, goal)
    if isinf(h0):
        return PlanResult("unsolvable")
    parents: dict[int, tuple[int, Optional[int]]] = {init.mask: (init.mask, None)}
    counter = itertools.count()
    open_heap: list[tuple[float, int, LogicalState]] = [(h0, next(counter), init)]
    closed: set[int] = set()
    expansions = 0
    while open_heap:
        _, _, state = heapq.heappop(open_heap)
        if state.mask in closed:
            continue
        closed.add(state.mask)
        if holds(state, goal):
            return PlanResult(
                "solved", _extract(grounded, parents, state.mask, init, goal), expansions
            )
        expansions += 1
        if expansions > node_budget:
            return PlanResult("budget_exhausted", expansions=expansions)
        for op in grounded.operators:
            if not holds(state, op.pre):
                continue
            nxt = apply_effects(state, op.eff)
            if nxt.mask in parents:
                continue
            h = h_add(grounded, nxt, goal)
            if isinf(h):
                # Unreachable under the relaxation, hence truly unreachable.
                parents[nxt.mask] = (state.mask, op.index)
                continue
            parents[nxt.mask] = (state.mask, op.index)
            heapq.heappush(open_heap, (h, next(counter), nxt))
    return PlanResult("unsolvable", expansions=expansions)
