"""
Generic MLN inference on any ground task.

The task is split into connected components. Small components are solved
exactly by enumeration; larger ones by MaxWalkSAT (MAP) or Gibbs sampling
(marginals).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from core import constants
from core.config import SolverConfig
from logic.cost import ClauseIndex, clauses_cost
from logic.oracles import brute_force_map, brute_force_marginals
from logic.types import GroundAtom, GroundClause, GroundDatabase
from master.partition import Component, partition_task

from .base import SolverResult, TaskInput, TaskSolver, task_cost

logger = logging.getLogger(__name__)


@dataclass
class LocalProblem:
    """A component with atoms re-indexed to ``0..n-1``."""

    atoms: tuple[int, ...]
    clauses: tuple[GroundClause, ...]

    @classmethod
    def extract(
        cls, problem: Sequence[GroundClause], component: Component
    ) -> LocalProblem:
        local = {atom: i for i, atom in enumerate(component.atoms)}
        clauses = tuple(
            GroundClause(
                problem[p].weight,
                tuple((local[a], positive) for a, positive in problem[p].literals),
                problem[p].rule,
            )
            for p in component.clauses
        )
        return cls(component.atoms, clauses)

    def database(self, db: GroundDatabase) -> GroundDatabase:
        atoms = tuple(
            GroundAtom(i, db.atoms[a].predicate, db.atoms[a].args)
            for i, a in enumerate(self.atoms)
        )
        return GroundDatabase(atoms=atoms, clauses=self.clauses)

    def values(self, world: Sequence[float]) -> dict[int, float]:
        return {atom: float(world[i]) for i, atom in enumerate(self.atoms)}


class WalkState:
    """
    Assignment plus per-clause true-literal counts, updated on each flip.

    Hard clauses weigh ``surrogate``; the cost is the surrogate cost.
    """

    def __init__(
        self,
        clauses: Sequence[GroundClause],
        world: np.ndarray,
        surrogate: float,
    ) -> None:
        self.clauses = clauses
        self.index = ClauseIndex(clauses)
        self.world = world
        self.weights = [
            (surrogate if c.weight > 0 else -surrogate) if c.hard else c.weight
            for c in clauses
        ]
        self.true_count = [
            sum(bool(world[a]) == positive for a, positive in c.literals)
            for c in clauses
        ]
        self.violated: list[int] = []
        self._slot: dict[int, int] = {}
        self.cost = 0.0
        for position in range(len(clauses)):
            if self._is_violated(position):
                self._mark(position)
                self.cost += abs(self.weights[position])

    def _is_violated(self, position: int) -> bool:
        weight = self.weights[position]
        if weight > 0:
            return self.true_count[position] == 0
        return weight < 0 and self.true_count[position] > 0

    def _mark(self, position: int) -> None:
        self._slot[position] = len(self.violated)
        self.violated.append(position)

    def _unmark(self, position: int) -> None:
        slot = self._slot.pop(position)
        last = self.violated.pop()
        if last != position:
            self.violated[slot] = last
            self._slot[last] = slot

    def delta(self, atom: int) -> float:
        """Change of cost if ``atom`` were flipped."""
        change = 0.0
        value = bool(self.world[atom])
        for position in self.index[atom]:
            weight = self.weights[position]
            if weight == 0:
                continue
            count = self.true_count[position]
            positive = dict(self.clauses[position].literals)[atom]
            after = count - 1 if value == positive else count + 1
            before_bad = count == 0 if weight > 0 else count > 0
            after_bad = after == 0 if weight > 0 else after > 0
            change += abs(weight) * (int(after_bad) - int(before_bad))
        return change

    def flip(self, atom: int) -> None:
        value = bool(self.world[atom])
        self.world[atom] = not value
        for position in self.index[atom]:
            was = position in self._slot
            positive = dict(self.clauses[position].literals)[atom]
            self.true_count[position] += -1 if value == positive else 1
            now = self._is_violated(position)
            if was and not now:
                self._unmark(position)
                self.cost -= abs(self.weights[position])
            elif now and not was:
                self._mark(position)
                self.cost += abs(self.weights[position])

    def repair_candidates(self, position: int) -> list[int]:
        """Atoms whose flip moves a violated clause towards satisfaction."""
        literals = self.clauses[position].literals
        if self.weights[position] > 0:
            return [a for a, _ in literals]
        return [a for a, positive in literals if bool(self.world[a]) == positive]


def _initial_world(
    clauses: Sequence[GroundClause], size: int, rng: np.random.Generator
) -> np.ndarray:
    """Random world that satisfies every unit hard clause."""
    world = rng.random(size) < 0.5
    for clause in clauses:
        if clause.hard and len(clause.literals) == 1:
            atom, positive = clause.literals[0]
            world[atom] = positive if clause.weight > 0 else not positive
    return world


def maxwalksat(
    clauses: Sequence[GroundClause],
    size: int,
    rng: np.random.Generator,
    config: SolverConfig,
    surrogate: float,
    max_flips: int | None = None,
) -> tuple[np.ndarray, float]:
    """
    Weighted MaxSAT local search.

    Each step picks a random violated clause; with probability ``noise`` it
    flips a random atom of it, otherwise the atom whose flip lowers the cost
    most. The best world over all restarts is returned with its exact cost
    (infinite when a hard clause is violated).
    """
    flips = config.max_flips if max_flips is None else max_flips
    best_world = np.zeros(size, dtype=bool)
    best_cost = math.inf
    for attempt in range(max(1, config.restarts)):
        start = _initial_world(clauses, size, rng)
        state = WalkState(clauses, start, surrogate)
        if state.cost < best_cost:
            best_world, best_cost = state.world.copy(), state.cost
        for _ in range(flips):
            if not state.violated:
                break
            position = state.violated[int(rng.integers(len(state.violated)))]
            candidates = state.repair_candidates(position)
            if rng.random() < config.noise:
                atom = candidates[int(rng.integers(len(candidates)))]
            else:
                atom = min(candidates, key=state.delta)
            state.flip(atom)
            if state.cost < best_cost:
                best_world, best_cost = state.world.copy(), state.cost
        logger.debug("MaxWalkSAT restart %d: best cost %s", attempt, best_cost)
        if best_cost == 0:
            break
    return best_world, clauses_cost(clauses, best_world)


def gibbs(
    clauses: Sequence[GroundClause],
    size: int,
    rng: np.random.Generator,
    config: SolverConfig,
    surrogate: float,
) -> np.ndarray:
    """
    Gibbs sampling of ``Pr[world] ~ exp(-cost)``.

    The chain starts from a short MaxWalkSAT run so that it begins inside the
    hard constraints; a resampled atom never moves into a hard violation.
    One sample is one sweep over all atoms.
    """
    start_flips = min(config.max_flips, 100 * max(size, 1))
    world, _ = maxwalksat(clauses, size, rng, config, surrogate, start_flips)
    index = ClauseIndex(clauses)
    weights = [c.weight for c in clauses]
    counts = np.zeros(size)
    samples = max(1, config.gibbs_samples)
    for sweep in range(config.gibbs_burn_in + samples):
        for atom in range(size):
            world[atom] = False
            off = index.local_cost(atom, world, weights)
            world[atom] = True
            on = index.local_cost(atom, world, weights)
            if math.isinf(off) and math.isinf(on):
                world[atom] = bool(rng.random() < 0.5)
                continue
            p = 1.0 if math.isinf(off) else 0.0 if math.isinf(on) else expit(off - on)
            world[atom] = bool(rng.random() < p)
        if sweep >= config.gibbs_burn_in:
            counts += world
    return counts / samples


def _solve_components(inp: TaskInput, map_mode: bool) -> SolverResult:
    problem = inp.problem()
    surrogate = inp.surrogate()
    values: dict[int, float] = {}
    components = partition_task(problem, inp.variables)
    for number, component in enumerate(components):
        local = LocalProblem.extract(problem, component)
        rng = np.random.default_rng([inp.seed, number])
        size = len(local.atoms)
        exact = size <= inp.config.exact_atoms
        if map_mode and exact:
            world, _ = brute_force_map(local.database(inp.db))
        elif map_mode:
            world, _ = maxwalksat(local.clauses, size, rng, inp.config, surrogate)
        elif exact:
            world = brute_force_marginals(local.database(inp.db))
        else:
            world = gibbs(local.clauses, size, rng, inp.config, surrogate)
        values.update(local.values(world))
    cost = task_cost(problem, values)
    logger.debug(
        "%s: %d component(s), task cost %s", inp.task.name, len(components), cost
    )
    return SolverResult(values, cost, not math.isinf(cost), GenericSolver.name)


def solve_generic_map(inp: TaskInput) -> SolverResult:
    """Exact enumeration on small components, MaxWalkSAT on the rest."""
    return _solve_components(inp, map_mode=True)


def solve_generic_marginal(inp: TaskInput) -> SolverResult:
    """Exact marginals on small components, Gibbs estimates on the rest."""
    return _solve_components(inp, map_mode=False)


class GenericSolver(TaskSolver):
    """Exact, MaxWalkSAT or Gibbs per connected component of the task."""

    name = "generic"

    def solve(self, inp: TaskInput) -> SolverResult:
        if inp.mode == constants.MODE_MAP:
            return solve_generic_map(inp)
        return solve_generic_marginal(inp)
