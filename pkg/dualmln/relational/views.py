"""
Conjunctive views with binding patterns, and their evaluation.

A view ``DMO^bf(x, y) <- affil(x, o), affil(y, o), pSimSoft(x, y)`` is probed
with constants for its ``b`` positions and answers the tuples over its ``f``
positions. Evaluation is an index-nested-loop join that always expands the
subgoal with the most bound columns next.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field

from core.types import PlanError
from logic.types import Constant, Term, Variable

from .relation import Catalog, Relation, Row

logger = logging.getLogger(__name__)

Binding = dict[Variable, str]


@dataclass(frozen=True, slots=True)
class Subgoal:
    relation: str
    terms: tuple[Term, ...]

    def variables(self) -> list[Variable]:
        return [t for t in self.terms if isinstance(t, Variable)]

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(map(str, self.terms))})"


@dataclass(frozen=True, slots=True)
class Condition:
    """Conjunctive comparison ``left = right`` (or ``!=`` when ``equal`` is False)."""

    equal: bool
    left: Term
    right: Term

    def variables(self) -> list[Variable]:
        return [t for t in (self.left, self.right) if isinstance(t, Variable)]

    def holds(self, binding: Mapping[Variable, str]) -> bool:
        left = _value(self.left, binding)
        right = _value(self.right, binding)
        return (left == right) == self.equal

    def __str__(self) -> str:
        return f"{self.left} {'=' if self.equal else '!='} {self.right}"


def _value(term: Term, binding: Mapping[Variable, str]) -> str:
    return term.value if isinstance(term, Constant) else binding[term]


@dataclass(frozen=True)
class AdornedView:
    """
    Data-movement query with a binding pattern.

    Attributes:
        name: View name used in reports.
        head: Head variables.
        adornment: One ``b`` or ``f`` per head position.
        body: Ordered subgoals.
        conditions: Comparisons that must hold.
        access_count: Estimated number of probes ``t``.
    """

    name: str
    head: tuple[Variable, ...]
    adornment: str
    body: tuple[Subgoal, ...]
    conditions: tuple[Condition, ...] = ()
    access_count: float = 1.0

    def __post_init__(self) -> None:
        if len(self.adornment) != len(self.head):
            raise PlanError(
                f"View {self.name}: adornment {self.adornment!r} does not match "
                f"head arity {len(self.head)}"
            )
        if set(self.adornment) - {"b", "f"}:
            raise PlanError(f"View {self.name}: adornment must use only 'b' and 'f'")
        if self.access_count <= 0:
            raise PlanError(f"View {self.name}: access count must be positive")
        body_vars = {v for goal in self.body for v in goal.variables()}
        for var in self.head:
            if var not in body_vars:
                raise PlanError(f"View {self.name}: unbound head variable {var}")
        for cond in self.conditions:
            for var in cond.variables():
                if var not in body_vars:
                    raise PlanError(f"View {self.name}: unbound variable {var}")

    @property
    def bound_positions(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.adornment) if a == "b")

    @property
    def free_positions(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.adornment) if a == "f")

    def bound_variables(self) -> frozenset[Variable]:
        return frozenset(self.head[i] for i in self.bound_positions)

    def all_free(self) -> AdornedView:
        return AdornedView(
            self.name,
            self.head,
            "f" * len(self.head),
            self.body,
            self.conditions,
            self.access_count,
        )

    def __str__(self) -> str:
        head = ", ".join(map(str, self.head))
        body = ", ".join([*map(str, self.body), *map(str, self.conditions)])
        return f"{self.name}^{self.adornment}({head}) <- {body}"


def join(
    subgoals: Sequence[Subgoal],
    relations: Sequence[Relation],
    conditions: Sequence[Condition] = (),
    binding: Binding | None = None,
) -> Iterator[Binding]:
    """
    Enumerate the variable bindings satisfying every subgoal and condition.

    Args:
        subgoals: Subgoals to satisfy.
        relations: Relation for each subgoal (same order).
        conditions: Comparisons checked as soon as their variables are bound.
        binding: Variables fixed before the join starts.
    """
    start: Binding = dict(binding or {})
    pending = [c for c in conditions if not _checkable(c, start)]
    if not all(c.holds(start) for c in conditions if _checkable(c, start)):
        return
    yield from _expand(list(range(len(subgoals))), subgoals, relations, pending, start)


def _checkable(cond: Condition, binding: Mapping[Variable, str]) -> bool:
    return all(var in binding for var in cond.variables())


def _bound_columns(goal: Subgoal, binding: Mapping[Variable, str]) -> int:
    return sum(
        1 for t in goal.terms if isinstance(t, Constant) or t in binding
    )


def _expand(
    remaining: list[int],
    subgoals: Sequence[Subgoal],
    relations: Sequence[Relation],
    pending: list[Condition],
    binding: Binding,
) -> Iterator[Binding]:
    if not remaining:
        yield dict(binding)
        return
    chosen = max(
        remaining,
        key=lambda i: (_bound_columns(subgoals[i], binding), -len(relations[i]), -i),
    )
    goal = subgoals[chosen]
    relation = relations[chosen]
    columns: list[int] = []
    values: list[str] = []
    for column, term in enumerate(goal.terms):
        if isinstance(term, Constant):
            columns.append(column)
            values.append(term.value)
        elif term in binding:
            columns.append(column)
            values.append(binding[term])
    rest = [i for i in remaining if i != chosen]
    for row in relation.lookup(tuple(columns), tuple(values)):
        extended = dict(binding)
        consistent = True
        for column, term in enumerate(goal.terms):
            if isinstance(term, Variable):
                seen = extended.setdefault(term, row[column])
                if seen != row[column]:
                    consistent = False
                    break
        if not consistent:
            continue
        ready = [c for c in pending if _checkable(c, extended)]
        if not all(c.holds(extended) for c in ready):
            continue
        still = [c for c in pending if c not in ready]
        yield from _expand(rest, subgoals, relations, still, extended)


def eval_eager(view: AdornedView, catalog: Catalog) -> Relation:
    """
    Materialize the full answer of ``view`` with every head position free.

    Returns:
        Relation: Head tuples with duplicates removed; iteration is sorted.
    """
    relations = [catalog[goal.relation] for goal in view.body]
    result = Relation(view.name, len(view.head))
    for binding in join(view.body, relations, view.conditions):
        result.add(binding[var] for var in view.head)
    logger.debug("Evaluated %s eagerly: %d tuples", view.name, len(result))
    return result


@dataclass(frozen=True)
class MaterializationPlan:
    """
    Partition of a view's subgoals into eagerly materialized blocks.

    Attributes:
        blocks: Subgoal indices per block, each sorted, blocks ordered by
            their first index.
        heads: Variables each block exposes (shared with the view head or
            with another block).
        mat_costs: Modeled materialization cost per block.
        inc_cost: Modeled cost of one bound probe.
        exec_cost: ``t * inc_cost + sum(mat_costs)``.
    """

    blocks: tuple[tuple[int, ...], ...]
    heads: tuple[tuple[Variable, ...], ...]
    mat_costs: tuple[float, ...] = ()
    inc_cost: float = 0.0
    exec_cost: float = 0.0

    @property
    def label(self) -> str:
        if len(self.blocks) == 1:
            return "eager"
        if all(len(block) == 1 for block in self.blocks):
            return "lazy"
        return "partial"

    def describe(self, view: AdornedView) -> str:
        parts = [
            "{" + ", ".join(str(view.body[i]) for i in block) + "}"
            for block in self.blocks
        ]
        return " | ".join(parts)


def block_heads(
    view: AdornedView, blocks: Sequence[Sequence[int]]
) -> tuple[tuple[Variable, ...], ...]:
    """Variables of each block that the view head or another block also uses."""
    heads = []
    head_vars = set(view.head)
    for position, block in enumerate(blocks):
        own: dict[Variable, None] = {}
        for i in block:
            for var in view.body[i].variables():
                own.setdefault(var, None)
        others = {
            var
            for other, members in enumerate(blocks)
            if other != position
            for i in members
            for var in view.body[i].variables()
        }
        outside = {
            var
            for cond in view.conditions
            if not set(cond.variables()) <= set(own)
            for var in cond.variables()
        }
        heads.append(
            tuple(v for v in own if v in head_vars or v in others or v in outside)
        )
    return tuple(heads)


def make_plan(
    view: AdornedView, blocks: Sequence[Sequence[int]]
) -> MaterializationPlan:
    """Normalize a subgoal partition into a plan without costs."""
    normalized = sorted(tuple(sorted(block)) for block in blocks)
    covered = sorted(i for block in normalized for i in block)
    if covered != list(range(len(view.body))) or any(not b for b in normalized):
        raise PlanError(f"Blocks {blocks} do not partition the body of {view.name}")
    return MaterializationPlan(tuple(normalized), block_heads(view, normalized))


@dataclass
class MaterializedView:
    """A view whose plan blocks have been evaluated and stored."""

    view: AdornedView
    plan: MaterializationPlan
    goals: list[Subgoal] = field(default_factory=list)
    relations: list[Relation] = field(default_factory=list)
    residual: list[Condition] = field(default_factory=list)


def materialize(
    view: AdornedView, plan: MaterializationPlan, catalog: Catalog
) -> MaterializedView:
    """
    Evaluate every block of ``plan`` so bound probes only join block results.

    Single-subgoal blocks reuse the base relation and its indexes.
    """
    done = MaterializedView(view, plan)
    for number, (block, head) in enumerate(zip(plan.blocks, plan.heads)):
        block_vars = {v for i in block for v in view.body[i].variables()}
        inner = [c for c in view.conditions if set(c.variables()) <= block_vars]
        if len(block) == 1 and not inner:
            goal = view.body[block[0]]
            done.goals.append(goal)
            done.relations.append(catalog[goal.relation])
            continue
        name = f"{view.name}#{number}"
        goals = [view.body[i] for i in block]
        relation = Relation(name, len(head))
        for binding in join(goals, [catalog[g.relation] for g in goals], inner):
            relation.add(binding[var] for var in head)
        done.goals.append(Subgoal(name, head))
        done.relations.append(relation)
    covered = {
        c
        for block in plan.blocks
        for c in view.conditions
        if set(c.variables()) <= {v for i in block for v in view.body[i].variables()}
    }
    done.residual = [c for c in view.conditions if c not in covered]
    return done


def eval_bound(
    view: AdornedView,
    plan: MaterializationPlan | MaterializedView,
    binding: Sequence[str],
    catalog: Catalog | None = None,
) -> set[Row]:
    """
    Answer one bound probe of ``view``.

    Args:
        view: The adorned view.
        plan: A plan (materialized on the fly from ``catalog``) or an already
            materialized view.
        binding: Constants for the ``b`` positions, in head order.
        catalog: Needed when ``plan`` has not been materialized yet.

    Returns:
        set[Row]: Tuples over the ``f`` positions.

    Raises:
        PlanError: Binding arity does not match the adornment.
    """
    bound = view.bound_positions
    if len(binding) != len(bound):
        raise PlanError(
            f"View {view.name} expects {len(bound)} bound value(s), "
            f"got {len(binding)}"
        )
    if isinstance(plan, MaterializedView):
        done = plan
    else:
        if catalog is None:
            raise PlanError("A catalog is required to materialize the plan")
        done = materialize(view, plan, catalog)
    start: Binding = {}
    for position, value in zip(bound, binding):
        var = view.head[position]
        if start.setdefault(var, value) != value:
            return set()
    free = view.free_positions
    return {
        tuple(result[view.head[i]] for i in free)
        for result in join(done.goals, done.relations, done.residual, start)
    }
