"""
Cost model for materializing data-movement views.

Costs are abstract page-fetch units. Cardinalities follow the classic
attribute-independence and uniformity assumptions over per-column distinct
counts.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass

from core import constants
from core.config import settings_section
from core.types import PlanError
from logic.types import Constant, Variable

from .relation import RelationStats
from .views import Subgoal


@dataclass(frozen=True)
class CostModelParams:
    """
    Attributes:
        alpha_io: Cost of one page fetch.
        beta: Memory/disk fudge factor applied to probes of small blocks.
        buffer_tuples: Blocks estimated below this size count as cached.
        write_cost: Cost of writing one materialized tuple.
    """

    alpha_io: float = constants.COST_ALPHA_IO
    beta: float = constants.COST_BETA
    buffer_tuples: float = constants.COST_BUFFER_TUPLES
    write_cost: float = constants.COST_WRITE
    max_subgoals: int = constants.MAX_ENUMERATED_SUBGOALS

    def __post_init__(self) -> None:
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.alpha_io <= 0:
            raise ValueError("alpha_io must be positive")

    @classmethod
    def from_settings(cls) -> CostModelParams:
        section = settings_section("DUALMLN_COST_MODEL")
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in section.items() if k in fields})


def estimate_cardinality(
    goals: Sequence[Subgoal],
    stats: Mapping[str, RelationStats],
    bound: Collection[Variable] = (),
) -> float:
    """
    Estimate the output size of a conjunctive query.

    The product of input sizes is divided by the distinct count of every
    constant-selected column, by every column of a bound variable, and for
    each join variable by the distinct counts of all but its smallest column.
    """
    if not goals:
        return 1.0
    size = 1.0
    occurrences: dict[Variable, list[int]] = defaultdict(list)
    for goal in goals:
        try:
            relation = stats[goal.relation]
        except KeyError:
            raise PlanError(f"No statistics for relation {goal.relation}") from None
        size *= relation.count
        for column, term in enumerate(goal.terms):
            if isinstance(term, Constant):
                size /= relation.distinct_of(column)
            else:
                occurrences[term].append(relation.distinct_of(column))
    for var, distinct in occurrences.items():
        ordered = sorted(distinct)
        divisors = ordered if var in bound else ordered[1:]
        for d in divisors:
            size /= d
    return size


def estimate_mat(
    goals: Sequence[Subgoal],
    stats: Mapping[str, RelationStats],
    params: CostModelParams | None = None,
) -> float:
    """Modeled cost of eagerly materializing one block: read plus write per tuple."""
    params = params or CostModelParams()
    rows = estimate_cardinality(goals, stats)
    return rows * params.alpha_io + rows * params.write_cost


def incremental_probe_cost(
    n1: float, n: float, probed_size: float, params: CostModelParams | None = None
) -> float:
    """
    Index-nested-loop cost of joining ``n1`` outer tuples into a probed block.

    ``alpha * n1 * (ceil(n / n1) + log2 |Q2|)``, scaled by ``beta`` when the
    probed block fits in the buffer.
    """
    params = params or CostModelParams()
    if n1 <= 0:
        return 0.0
    cost = params.alpha_io * n1 * (math.ceil(n / n1) + math.log2(max(probed_size, 1.0)))
    if probed_size < params.buffer_tuples:
        cost *= params.beta
    return cost


def estimate_inc(
    blocks: Sequence[Sequence[Subgoal]],
    bound: Collection[Variable],
    stats: Mapping[str, RelationStats],
    params: CostModelParams | None = None,
) -> float:
    """
    Modeled cost of one bound probe over materialized blocks.

    Blocks are joined in ascending order of their bound-selection estimate.
    The binding itself is the single outer tuple of the first probe.
    """
    params = params or CostModelParams()
    order = sorted(
        range(len(blocks)),
        key=lambda i: (estimate_cardinality(blocks[i], stats, bound), i),
    )
    total = 0.0
    joined: list[Subgoal] = []
    outer = 1.0
    for i in order:
        probed_size = estimate_cardinality(blocks[i], stats)
        joined.extend(blocks[i])
        produced = estimate_cardinality(joined, stats, bound)
        total += incremental_probe_cost(outer, produced, probed_size, params)
        outer = produced
    return total
