"""
Choose how much of a view to materialize.

``ExecCost = t * Inc + sum(Mat)`` is evaluated for every partition of the
view's subgoals; the cheapest wins.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import replace

from .cost_model import CostModelParams, estimate_inc, estimate_mat
from .relation import RelationStats
from .views import AdornedView, MaterializationPlan, make_plan

logger = logging.getLogger(__name__)


def set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """Yield every partition of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [[first], *partition]
        for position in range(len(partition)):
            yield [
                *partition[:position],
                [first, *partition[position]],
                *partition[position + 1 :],
            ]


def score_plan(
    view: AdornedView,
    plan: MaterializationPlan,
    stats: Mapping[str, RelationStats],
    params: CostModelParams | None = None,
) -> MaterializationPlan:
    """Attach modeled costs to ``plan``."""
    params = params or CostModelParams()
    blocks = [[view.body[i] for i in block] for block in plan.blocks]
    mat = tuple(estimate_mat(goals, stats, params) for goals in blocks)
    inc = estimate_inc(blocks, view.bound_variables(), stats, params)
    return replace(
        plan,
        mat_costs=mat,
        inc_cost=inc,
        exec_cost=view.access_count * inc + sum(mat),
    )


def eager_plan(view: AdornedView) -> MaterializationPlan:
    return make_plan(view, [list(range(len(view.body)))])


def lazy_plan(view: AdornedView) -> MaterializationPlan:
    return make_plan(view, [[i] for i in range(len(view.body))])


def candidate_plans(
    view: AdornedView, params: CostModelParams | None = None
) -> list[MaterializationPlan]:
    """Plans in the search space: the full partition lattice, or both extremes."""
    params = params or CostModelParams()
    count = len(view.body)
    if count > params.max_subgoals:
        logger.info(
            "View %s has %d subgoals; comparing only eager and lazy plans",
            view.name,
            count,
        )
        plans = [eager_plan(view), lazy_plan(view)]
        return plans if count > 1 else plans[:1]
    return [make_plan(view, blocks) for blocks in set_partitions(list(range(count)))]


def choose_plan(
    view: AdornedView,
    stats: Mapping[str, RelationStats],
    params: CostModelParams | None = None,
) -> MaterializationPlan:
    """
    Pick the plan with the lowest modeled ExecCost.

    Ties go to fewer blocks, then to the lexicographically smallest blocks.
    """
    params = params or CostModelParams()
    scored = [
        score_plan(view, plan, stats, params)
        for plan in candidate_plans(view, params)
    ]
    best = min(scored, key=lambda p: (p.exec_cost, len(p.blocks), p.blocks))
    logger.debug(
        "View %s: chose %s plan with cost %.3f", view.name, best.label, best.exec_cost
    )
    return best
