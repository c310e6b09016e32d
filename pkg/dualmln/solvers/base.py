"""
Shared machinery for task solvers.

A task sees every query atom of its ground clauses as a variable. Solvers
for specialized kinds decide the atoms of the owned relation exactly while
the remaining ("input") atoms are held at their current values; the input
atoms are then refined by iterated conditional modes (MAP) or mean-field
updates (marginal), and the owned atoms are re-solved, for a few rounds.

Multipliers enter as singleton clauses on the shared atoms; their weights
are not scaled.
"""

from __future__ import annotations

import abc
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from compiler.types import Task
from core import constants
from core.config import SolverConfig
from logic.cost import ClauseIndex, clauses_cost
from logic.types import GroundClause, GroundDatabase, GroundLiteral
from parsing.program import MLNProgram

logger = logging.getLogger(__name__)


@dataclass
class TaskInput:
    """
    Everything one solver call needs.

    Attributes:
        task: The task being solved.
        db: The full ground database (atoms, evidence).
        clauses: Ground clauses of the task's rules, unscaled.
        variables: Atom ids of the task, sorted.
        priors: Multiplier per shared atom, used as an added singleton weight.
        copies: Current copy values of the task's atoms (starting point for
            input atoms).
        scale: Weight multiplier (1 for MAP, number of tasks for marginals).
        mode: ``map`` or ``marginal``.
        seed: Seed for randomized solvers.
        config: Solver parameters.
        link_rows: True evidence tuples of the chain link relation, if any.
        program: The source program, for solvers that inspect rule shapes.
    """

    task: Task
    db: GroundDatabase
    clauses: tuple[GroundClause, ...]
    variables: tuple[int, ...]
    priors: Mapping[int, float] = field(default_factory=dict)
    copies: Mapping[int, float] = field(default_factory=dict)
    scale: float = 1.0
    mode: str = constants.MODE_MAP
    seed: int = 0
    config: SolverConfig = field(default_factory=SolverConfig)
    link_rows: frozenset[tuple[str, ...]] = frozenset()
    program: MLNProgram | None = None

    def owned_atoms(self) -> list[int]:
        owned = set(self.task.owned)
        return [a for a in self.variables if self.db.atoms[a].predicate in owned]

    def input_atoms(self) -> list[int]:
        owned = set(self.task.owned)
        return [a for a in self.variables if self.db.atoms[a].predicate not in owned]

    def problem(self) -> tuple[GroundClause, ...]:
        """Scaled task clauses followed by the prior singletons."""
        scaled = [
            GroundClause(c.weight * self.scale, c.literals, c.rule)
            for c in self.clauses
            if c.weight != 0
        ]
        priors = [
            GroundClause(weight, ((atom, True),), -1)
            for atom, weight in sorted(self.priors.items())
            if weight != 0
        ]
        return tuple(scaled + priors)

    def surrogate(self) -> float:
        """Finite stand-in for HARD: base plus the total soft weight."""
        soft = sum(abs(c.weight) for c in self.problem() if not c.hard)
        return self.config.hard_surrogate_base + soft


@dataclass
class SolverResult:
    """
    Attributes:
        values: Value per task atom: 0/1 for MAP, a probability otherwise.
        cost: Task cost of the (thresholded) assignment, priors included.
        feasible: False if the assignment violates a hard clause of the task.
        solver: Name of the solver that produced the result.
    """

    values: dict[int, float]
    cost: float
    feasible: bool = True
    solver: str = ""


@dataclass(frozen=True)
class ReducedClause:
    """A clause restricted to the free atoms, with its expected weight."""

    weight: float
    literals: tuple[GroundLiteral, ...]
    rule: int = -1

    def violated(self, assignment: Mapping[int, bool]) -> bool:
        satisfied = any(assignment[a] == positive for a, positive in self.literals)
        return not satisfied if self.weight > 0 else satisfied

    def atoms(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.literals)


def condition(
    clauses: Iterable[GroundClause],
    fixed: Mapping[int, float],
    surrogate: float | None = None,
) -> tuple[list[ReducedClause], float]:
    """
    Reduce clauses given the (possibly fractional) values of fixed atoms.

    Each clause keeps its free literals and has its weight scaled by the
    probability ``q`` that every fixed literal is false. A hard clause stays
    hard when ``q`` is 1 and is dropped when ``q`` is 0; in between it takes
    ``surrogate * q`` if a surrogate is given (marginal mode).

    Returns:
        The reduced clauses and the expected constant cost of the parts
        decided by the fixed atoms alone.
    """
    reduced: list[ReducedClause] = []
    constant = 0.0
    for clause in clauses:
        if clause.weight == 0:
            continue
        q = 1.0
        free: list[GroundLiteral] = []
        for atom, positive in clause.literals:
            if atom in fixed:
                true = fixed[atom] if positive else 1.0 - fixed[atom]
                q *= 1.0 - true
            else:
                free.append((atom, positive))
        magnitude = abs(clause.weight)
        if clause.weight < 0:
            constant += magnitude * (1.0 - q)
        if q == 0:
            continue
        if clause.hard:
            weight = math.inf if q >= 1 or surrogate is None else surrogate * q
        else:
            weight = clause.weight * q
        if not free:
            if clause.weight > 0:
                constant += weight
            continue
        reduced.append(ReducedClause(weight, tuple(free), clause.rule))
    return reduced, constant


def reduced_cost(
    reduced: Iterable[ReducedClause], assignment: Mapping[int, bool]
) -> float:
    total = 0.0
    for clause in reduced:
        if clause.violated(assignment):
            if math.isinf(clause.weight):
                return math.inf
            total += abs(clause.weight)
    return total


def threshold(values: Mapping[int, float]) -> dict[int, bool]:
    return {atom: value >= 0.5 for atom, value in values.items()}


def task_cost(problem: Sequence[GroundClause], values: Mapping[int, float]) -> float:
    return clauses_cost(problem, threshold(values))


def icm_pass(
    problem: Sequence[GroundClause],
    index: ClauseIndex,
    world: dict[int, bool],
    atoms: Iterable[int],
) -> bool:
    """
    Set each atom in turn to its locally cheaper value; ties keep the
    current value.

    Returns:
        bool: True if any atom changed.
    """
    weights = [c.weight for c in problem]
    changed = False
    for atom in atoms:
        current = world[atom]
        here = index.local_cost(atom, world, weights)
        world[atom] = not current
        there = index.local_cost(atom, world, weights)
        if there < here:
            changed = True
        else:
            world[atom] = current
    return changed


def expected_local_cost(
    problem: Sequence[GroundClause],
    index: ClauseIndex,
    probs: Mapping[int, float],
    atom: int,
    value: bool,
    surrogate: float,
) -> float:
    """Expected cost of the clauses around ``atom`` with ``atom = value`` and
    the other atoms independent with marginals ``probs``."""
    total = 0.0
    for position in index[atom]:
        clause = problem[position]
        weight = surrogate if clause.hard else abs(clause.weight)
        all_false = 1.0
        for other, positive in clause.literals:
            if other == atom:
                true = value == positive
                all_false *= 0.0 if true else 1.0
            else:
                p = probs[other]
                all_false *= 1.0 - (p if positive else 1.0 - p)
        total += weight * (all_false if clause.weight > 0 else 1.0 - all_false)
    return total


def mean_field_pass(
    problem: Sequence[GroundClause],
    index: ClauseIndex,
    probs: dict[int, float],
    atoms: Iterable[int],
    surrogate: float,
) -> float:
    """
    Update each atom's marginal to ``sigmoid(E[cost | 0] - E[cost | 1])``.

    Returns:
        float: Largest change of any marginal.
    """
    largest = 0.0
    for atom in atoms:
        off = expected_local_cost(problem, index, probs, atom, False, surrogate)
        on = expected_local_cost(problem, index, probs, atom, True, surrogate)
        updated = float(expit(off - on))
        largest = max(largest, abs(updated - probs[atom]))
        probs[atom] = updated
    return largest


class TaskSolver(abc.ABC):
    """A solver for one task kind."""

    name = "solver"

    @abc.abstractmethod
    def solve(self, inp: TaskInput) -> SolverResult: ...


class ConditionalSolver(TaskSolver):
    """
    Base for specialized solvers: exact on owned atoms, local search on inputs.

    Subclasses implement :meth:`solve_owned_map` and
    :meth:`solve_owned_marginal` over clauses that only mention owned atoms.
    """

    @abc.abstractmethod
    def solve_owned_map(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]: ...

    @abc.abstractmethod
    def solve_owned_marginal(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]: ...

    def solve(self, inp: TaskInput) -> SolverResult:
        problem = inp.problem()
        index = ClauseIndex(problem)
        owned = inp.owned_atoms()
        inputs = inp.input_atoms()
        rounds = max(1, inp.config.refine_rounds)
        if inp.mode == constants.MODE_MAP:
            world = {a: inp.copies.get(a, 0.0) >= 0.5 for a in inputs}
            values: dict[int, float] = {}
            for number in range(rounds):
                fixed = {a: float(world[a]) for a in inputs}
                reduced, _ = condition(problem, fixed)
                values = self.solve_owned_map(inp, reduced, owned)
                world.update({a: v >= 0.5 for a, v in values.items()})
                if not inputs or not icm_pass(problem, index, world, inputs):
                    break
                logger.debug("%s: input refinement round %d", inp.task.name, number + 1)
            values.update({a: float(world[a]) for a in inputs})
        else:
            surrogate = inp.surrogate()
            probs = {a: float(inp.copies.get(a, 0.5)) for a in inputs}
            values = {}
            for _ in range(rounds):
                reduced, _ = condition(problem, probs, surrogate)
                values = self.solve_owned_marginal(inp, reduced, owned)
                if not inputs:
                    break
                merged = {**values, **probs}
                if mean_field_pass(problem, index, merged, inputs, surrogate) < 1e-9:
                    probs.update({a: merged[a] for a in inputs})
                    break
                probs.update({a: merged[a] for a in inputs})
            values.update(probs)
        cost = task_cost(problem, values)
        return SolverResult(values, cost, not math.isinf(cost), self.name)


def penalty_table(
    reduced: Iterable[ReducedClause], labels: Sequence[Mapping[int, bool]]
) -> np.ndarray:
    """Cost of ``reduced`` under each labelled assignment."""
    clauses = list(reduced)
    return np.array([reduced_cost(clauses, assignment) for assignment in labels])
