"""
Cost semantics shared by every solver.

A ground clause with positive weight (or HARD) is violated when it is false;
one with negative weight is violated when it is true. The cost of a world is
the sum of ``|w|`` over violated clauses plus the database offset, and is
infinite as soon as a hard clause is violated.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from typing import Any

from .types import GroundClause, GroundDatabase, World


def clause_satisfied(clause: GroundClause, world: Sequence[Any]) -> bool:
    """Return True if some literal of the clause holds in ``world``."""
    return any(bool(world[atom]) == positive for atom, positive in clause.literals)


def clause_violated(clause: GroundClause, world: Sequence[Any]) -> bool:
    """
    Decide whether a ground clause is violated in a world.

    Args:
        clause: The ground clause.
        world: Truth values indexed by atom id.

    Returns:
        bool: True for a false clause with positive (or HARD) weight, or a
        true clause with negative weight. Zero-weight clauses never count.
    """
    if clause.weight > 0:
        return not clause_satisfied(clause, world)
    if clause.weight < 0:
        return clause_satisfied(clause, world)
    return False


def clauses_cost(
    clauses: Iterable[GroundClause], world: Sequence[Any], scale: float = 1.0
) -> float:
    """Sum of ``scale * |w|`` over violated clauses; infinite on a hard violation."""
    total = 0.0
    for clause in clauses:
        if clause_violated(clause, world):
            if clause.hard:
                return math.inf
            total += scale * abs(clause.weight)
    return total


def world_cost(db: GroundDatabase, world: World | Sequence[Any]) -> float:
    """
    Cost of a world under a ground database.

    Raises:
        ValueError: If the world does not cover every atom.
    """
    if len(world) != db.num_atoms:
        raise ValueError(
            f"world has {len(world)} values, database has {db.num_atoms} atoms"
        )
    if math.isinf(db.offset):
        return math.inf
    return db.offset + clauses_cost(db.clauses, world)


def hard_feasible(clauses: Iterable[GroundClause], world: Sequence[Any]) -> bool:
    return not any(c.hard and clause_violated(c, world) for c in clauses)


def prior_cost(weight: float, value: float) -> float:
    """
    Cost of a singleton clause of weight ``weight`` on an atom with value ``value``.

    Equals ``max(weight, 0) - weight * value`` for 0/1 values.
    """
    return max(weight, 0.0) - weight * value


class ClauseIndex:
    """Maps each atom id to the positions of the clauses that mention it."""

    def __init__(self, clauses: Sequence[GroundClause]) -> None:
        self.clauses = clauses
        by_atom: dict[int, list[int]] = defaultdict(list)
        for position, clause in enumerate(clauses):
            for atom, _ in clause.literals:
                by_atom[atom].append(position)
        self._by_atom = dict(by_atom)

    def __getitem__(self, atom: int) -> list[int]:
        return self._by_atom.get(atom, [])

    def atoms(self) -> list[int]:
        return sorted(self._by_atom)

    def local_cost(
        self, atom: int, world: Sequence[Any], weights: Sequence[float]
    ) -> float:
        """Cost of the clauses around ``atom`` using per-clause effective weights."""
        total = 0.0
        for position in self._by_atom.get(atom, ()):
            clause = self.clauses[position]
            weight = weights[position]
            satisfied = clause_satisfied(clause, world)
            if (weight > 0 and not satisfied) or (weight < 0 and satisfied):
                if math.isinf(weight):
                    return math.inf
                total += abs(weight)
        return total
