"""Robust chains: plans augmented by backward condition propagation.

Conditions are regressed from the goal through the plan, stopping at the
step whose effects create them; every step in between gains the condition
in both its entry (pre) and continuation (run) sets.  Each step's own
positive preconditions join the carried set, so mid-plan achievements are
ordered as well, not just goal atoms.  The reactive executive can then
never enter a step whose prerequisites a skipped step was supposed to
establish, and entering a step whose effective conditions hold is always
safe for the remainder of the chain.
"""

from __future__ import annotations

from dataclasses import dataclass

from .logic import ConditionSet, LogicalState, apply_effects, holds
from .planner import GroundOperator, GroundedDomain, Plan


class UnsupportedFeatureError(ValueError):
    """A chain was requested for a feature regression does not cover."""


class ChainInconsistencyError(ValueError):
    """The plan deletes a condition some later step still needs."""

    def __init__(self, step: int, atoms):
        self.step = step
        self.atoms = atoms
        names = ", ".join(sorted(str(a) for a in atoms))
        super().__init__(
            f"step {step} deletes conditions needed later with no re-producer: {names}"
        )


@dataclass(frozen=True)
class AugmentedOperator:
    """A ground operator plus the conditions regression attached to it."""

    base: GroundOperator
    extra_pre: ConditionSet
    extra_run: ConditionSet
    effective_pre: ConditionSet
    effective_run: ConditionSet

    @property
    def name(self) -> str:
        return self.base.name


@dataclass(frozen=True)
class Chain:
    """Ordered augmented steps; same order as the source plan, last step is
    the highest priority."""

    steps: tuple[AugmentedOperator, ...]
    goal: ConditionSet
    # Conditions regression pushed past the first step; they must already
    # hold in any state the chain is meant to run from.
    front_conditions: ConditionSet

    def __len__(self) -> int:
        return len(self.steps)

    def names(self) -> list[str]:
        return [s.name for s in self.steps]

    def to_json_dict(self) -> dict:
        def atom_names(mask: int, vocab) -> list[str]:
            return sorted(str(a) for a in vocab.atoms_of(mask))

        vocab = self.goal.vocabulary
        return {
            "format_version": 1,
            "goal": atom_names(self.goal.pos_mask, vocab),
            "front_conditions": atom_names(self.front_conditions.pos_mask, vocab),
            "steps": [
                {
                    "operator": s.base.schema.name,
                    "args": list(s.base.bound_args),
                    "pre": atom_names(s.base.pre.pos_mask, vocab),
                    "run": atom_names(s.base.run.pos_mask, vocab),
                    "extra_pre": atom_names(s.extra_pre.pos_mask, vocab),
                    "extra_run": atom_names(s.extra_run.pos_mask, vocab),
                }
                for s in self.steps
            ],
        }


def build_chain(plan: Plan, goal: ConditionSet) -> Chain:
    """Back-propagate conditions from the goal through the plan.

    Walking from the last step to the first, the carried set holds every
    positive condition some later step (or the goal) needs that no step in
    between produces.  A step's extras are the carried conditions it does
    not itself add; its own positive preconditions then join the carry.
    Raises :class:`ChainInconsistencyError` if a step deletes a carried
    condition, and :class:`UnsupportedFeatureError` for negative goal
    literals (the kitchen goals are positive; regression over negations is
    out of scope).
    """
    vocab = goal.vocabulary
    if goal.neg_mask:
        raise UnsupportedFeatureError(
            "cannot build a chain for a goal with negative literals"
        )

    carry = goal.pos_mask
    augmented: list[AugmentedOperator] = []
    for i in range(len(plan.steps) - 1, -1, -1):
        op = plan.steps[i]
        doomed = carry & op.eff.del_mask
        if doomed:
            raise ChainInconsistencyError(i, vocab.atoms_of(doomed))
        extra = carry & ~op.eff.add_mask
        extra_pre_mask = extra & ~op.pre.pos_mask
        extra_run_mask = extra & ~op.run.pos_mask
        extra_pre = ConditionSet(vocab, extra_pre_mask)
        extra_run = ConditionSet(vocab, extra_run_mask)
        augmented.append(
            AugmentedOperator(
                base=op,
                extra_pre=extra_pre,
                extra_run=extra_run,
                effective_pre=op.pre.union(extra_pre),
                effective_run=op.run.union(extra_run),
            )
        )
        carry = extra | op.pre.pos_mask

    augmented.reverse()
    return Chain(
        steps=tuple(augmented),
        goal=goal,
        front_conditions=ConditionSet(vocab, carry),
    )


def verify_chain(chain: Chain, init: LogicalState) -> bool:
    """True iff executing every step in order from ``init`` satisfies each
    effective precondition and the final state satisfies the goal."""
    state = init
    for step in chain.steps:
        if not holds(state, step.effective_pre):
            return False
        state = apply_effects(state, step.base.eff)
    return holds(state, chain.goal)


def chain_from_json(grounded: GroundedDomain, data: dict) -> Chain:
    """Rebuild a chain from its JSON form.

    The extras are recomputed from the steps and goal rather than trusted
    from the file, so a hand-edited chain cannot carry inconsistent
    conditions.  The chain may target a different initial state than the
    problem's, in which case plan-level validation is skipped."""
    vocab = grounded.vocabulary
    goal = ConditionSet.from_atoms(
        vocab, [_atom_from_name(vocab, n) for n in data["goal"]]
    )
    steps = tuple(
        grounded.operator_named(s["operator"], tuple(s.get("args", ())))
        for s in data["steps"]
    )
    try:
        the_plan = Plan(steps, grounded.init, goal)
    except ValueError:
        the_plan = object.__new__(Plan)
        object.__setattr__(the_plan, "steps", steps)
        object.__setattr__(the_plan, "init", grounded.init)
        object.__setattr__(the_plan, "goal", goal)
    return build_chain(the_plan, goal)


def _atom_from_name(vocab, name: str):
    if "(" in name:
        head, rest = name.split("(", 1)
        args = [a.strip() for a in rest.rstrip(")").split(",") if a.strip()]
        return vocab.get(head, *args)
    return vocab.get(name)
