"""
Data-movement views registered for each task.

Grounding evaluates the per-rule views listed for generic tasks. The feature
views of classification (``I^{b..bf..f}``), chain and coref tasks model the
access pattern their solvers would have and only feed the plan report.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from compiler.properties import is_ref, is_sym, is_trn
from compiler.types import Task, TaskKind
from core.config import SolverConfig
from logic.grounding import (
    DOMAIN_PREFIX,
    evidence_catalog,
    grounding_view,
    variable_domains,
)
from logic.types import Clause, GroundDatabase, Literal, Variable
from parsing.program import MLNProgram
from relational.cost_model import CostModelParams
from relational.optimizer import choose_plan
from relational.relation import Catalog, Relation
from relational.views import AdornedView, Condition, Subgoal

logger = logging.getLogger(__name__)


def dmo_catalog(program: MLNProgram, db: GroundDatabase) -> Catalog:
    """Evidence relations plus one relation of candidate atoms per query predicate."""
    catalog = evidence_catalog(program)
    for relation in program.query_relations():
        rows = (db.atoms[a].args for a in db.atoms_of(relation))
        catalog.register(Relation(relation, program.schema(relation).arity, rows))
    return catalog


def _owned_literal(clause: Clause, relation: str) -> Literal | None:
    occurrences = clause.occurrences(relation)
    positive = [lit for lit in occurrences if lit.positive]
    return (positive or occurrences or [None])[0]


def feature_view(
    program: MLNProgram,
    clause: Clause,
    owned: Literal,
    name: str,
    bound: Sequence[Variable],
    access_count: float,
) -> AdornedView:
    """
    View over the conditions of ``clause`` other than the owned literal.

    The head lists ``bound`` first (adorned ``b``), then the remaining
    variables (``f``). Variables no condition covers range over their domain.
    """
    domains = variable_domains(program, clause)
    body: list[Subgoal] = [
        Subgoal(lit.predicate, lit.args)
        for lit in clause.literals
        if lit is not owned and not lit.positive
    ]
    covered = {v for goal in body for v in goal.variables()}
    variables = clause.variables()
    for var in variables:
        if var not in covered:
            body.append(Subgoal(DOMAIN_PREFIX + domains[var], (var,)))
    free = [v for v in variables if v not in bound]
    conditions = tuple(
        Condition(not eq.positive, eq.left, eq.right) for eq in clause.equalities
    )
    return AdornedView(
        name,
        (*bound, *free),
        "b" * len(bound) + "f" * len(free),
        tuple(body),
        conditions,
        access_count,
    )


def _structural(clause: Clause, relation: str) -> bool:
    return clause.hard and (
        is_ref(clause, relation) or is_sym(clause, relation) or is_trn(clause, relation)
    )


def coref_access_count(
    task: Task, db: GroundDatabase, config: SolverConfig
) -> float:
    """Mentions divided by the expected number of positive neighbours."""
    pairs = [db.atoms[a].args for a in db.atoms_of(task.relation)]
    mentions = {c for args in pairs for c in args}
    if not mentions:
        return 1.0
    edges = sum(1 for a, b in pairs if a < b)
    degree = config.coref_degree or max(2.0 * edges / len(mentions), 1.0)
    return max(len(mentions) / degree, 1.0)


def register_dmos(
    task: Task,
    program: MLNProgram,
    db: GroundDatabase,
    config: SolverConfig | None = None,
) -> list[AdornedView]:
    """
    Adorned views for a task's data-movement operators, with access counts.

    Generic tasks get one grounding view per rule. The feature views of
    classification, chain and coreference tasks are registered for the plan
    report only: those solvers read features from the ground clauses in
    ``TaskInput``. Coref answers neighbour queries through its own
    ``neighbour_view``.
    """
    config = config or SolverConfig()
    views: list[AdornedView] = []
    if task.kind is TaskKind.GENERIC:
        for i in task.rules:
            name = f"{task.name}/F{i + 1}"
            views.append(grounding_view(program, program.rules[i], name))
        return views

    relation = task.relation
    objects = len(db.atoms_of(relation))
    coref_t = coref_access_count(task, db, config)
    for i in task.rules:
        clause = program.rules[i]
        owned = _owned_literal(clause, relation)
        if owned is None or _structural(clause, relation):
            continue
        name = f"{task.name}/F{i + 1}"
        owned_vars = list(dict.fromkeys(owned.variables()))
        if task.kind is TaskKind.SIMPLE:
            views.append(
                feature_view(program, clause, owned, name, owned_vars, max(objects, 1))
            )
        elif task.kind is TaskKind.CORRELATED:
            views.append(feature_view(program, clause, owned, name, [], 1.0))
        else:
            views.append(
                feature_view(program, clause, owned, name, owned_vars[:1], coref_t)
            )
    return views


def describe_dmos(
    views: Sequence[AdornedView],
    catalog: Catalog,
    params: CostModelParams | None = None,
) -> list[str]:
    """One line per view: adornment, access count, chosen partition and costs."""
    stats = catalog.stats()
    lines = []
    for view in views:
        plan = choose_plan(view, stats, params)
        mat = ", ".join(f"{c:.1f}" for c in plan.mat_costs)
        lines.append(
            f"{view}  t={view.access_count:g}  plan={plan.label} "
            f"{plan.describe(view)}  inc={plan.inc_cost:.3f} mat=[{mat}] "
            f"exec={plan.exec_cost:.3f}"
        )
    return lines
