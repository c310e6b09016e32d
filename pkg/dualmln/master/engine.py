"""
The master loop of dual decomposition.

Tasks are first run once in schedule order, each reading the outputs of its
predecessors. Every following round solves all tasks with the current
multipliers folded in as singleton weights, then moves the multipliers of a
relation as soon as every task holding it has reported. The loop stops when
the copies agree (up to the disagreement threshold) or after the iteration
budget. The final world takes each relation from the last task in schedule
order that holds it.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from compiler.types import LogicalPlan, Task
from core import constants
from core.config import (
    MasterConfig,
    SolverConfig,
    get_master_defaults,
    get_solver_defaults,
)
from core.types import InfeasibleTaskError, UnsupportedStructureError
from logic.cost import hard_feasible, world_cost
from logic.types import GroundClause, GroundDatabase
from parsing.program import MLNProgram
from solvers.base import SolverResult, TaskInput, TaskSolver, threshold
from solvers.registry import fallback_solver, solver_for

from .multipliers import (
    MultiplierStore,
    SharedVariableRegistry,
    StepSchedule,
    update_multipliers,
)

logger = logging.getLogger(__name__)

STOP_AGREEMENT = "agreement"
STOP_BUDGET = "iteration budget"


@dataclass(frozen=True)
class IterationRecord:
    k: int
    alpha: float
    rmse: float
    disagreement: float
    dual: float
    best_primal: float


@dataclass
class ConvergenceStats:
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""
    certified: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_rmse(self) -> float:
        return self.records[-1].rmse if self.records else 0.0


@dataclass
class InferenceResult:
    """
    Attributes:
        values: Value per ground query atom: 0/1 for MAP, a probability for
            marginal inference.
        cost: Cost of the (thresholded) output world on the full database.
        feasible: False when the output violates a hard clause.
        stats: Per-iteration convergence record.
        solvers: Solver that last handled each task.
    """

    mode: str
    values: dict[int, float]
    cost: float
    feasible: bool
    stats: ConvergenceStats
    solvers: dict[str, str] = field(default_factory=dict)


def task_seed(seed: int, task_index: int, iteration: int) -> int:
    sequence = np.random.SeedSequence([seed & (2**64 - 1), task_index, iteration])
    return int(sequence.generate_state(1)[0])


class Master:
    """Runs one inference over a compiled plan."""

    def __init__(
        self,
        program: MLNProgram,
        db: GroundDatabase,
        plan: LogicalPlan,
        mode: str = constants.MODE_MAP,
        config: MasterConfig | None = None,
        solver_config: SolverConfig | None = None,
    ) -> None:
        if mode not in constants.MODES:
            raise ValueError(f"Unknown inference mode: {mode}")
        self.program = program
        self.db = db
        self.plan = plan
        self.mode = mode
        self.config = config or get_master_defaults()
        self.solver_config = solver_config or get_solver_defaults()
        self.schedule = StepSchedule(
            self.config.step, self.config.schedule, self.config.decay_horizon
        )
        self.tasks = plan.scheduled()
        self.scale = float(len(self.tasks)) if mode == constants.MODE_MARGINAL else 1.0
        self._index = {task.name: i for i, task in enumerate(plan.tasks)}
        self._clauses = {task.name: self._task_clauses(task) for task in self.tasks}
        self.variables = {task.name: self._task_variables(task) for task in self.tasks}
        relation_of = {atom.id: atom.predicate for atom in db.atoms}
        self.registry = SharedVariableRegistry.build(
            self.variables, relation_of, plan.order
        )
        self.store = MultiplierStore(self.registry)
        self.solvers: dict[str, TaskSolver] = {
            task.name: solver_for(task.kind) for task in self.tasks
        }
        self.outputs: dict[str, dict[int, float]] = {}

    def _task_clauses(self, task: Task) -> tuple[GroundClause, ...]:
        rules = set(task.rules)
        return tuple(c for c in self.db.clauses if c.rule in rules)

    def _task_variables(self, task: Task) -> tuple[int, ...]:
        atoms = {a for c in self._clauses[task.name] for a in c.atoms()}
        for relation in task.owned:
            atoms.update(self.db.atoms_of(relation))
        return tuple(sorted(atoms))

    def _link_rows(self, task: Task) -> frozenset[tuple[str, ...]]:
        if task.chain is None:
            return frozenset()
        return frozenset(
            args for predicate, args in self.db.evidence if predicate == task.chain.link
        )

    def task_input(
        self, task: Task, iteration: int, current: Mapping[int, float]
    ) -> TaskInput:
        copies = {**current, **self.outputs.get(task.name, {})}
        return TaskInput(
            task=task,
            db=self.db,
            clauses=self._clauses[task.name],
            variables=self.variables[task.name],
            priors=self.store.priors(task.name),
            copies=copies,
            scale=self.scale,
            mode=self.mode,
            seed=task_seed(self.config.seed, self._index[task.name], iteration),
            config=self.solver_config,
            link_rows=self._link_rows(task),
            program=self.program,
        )

    def solve(self, task: Task, inp: TaskInput) -> SolverResult:
        solver = self.solvers[task.name]
        try:
            return solver.solve(inp)
        except UnsupportedStructureError as exc:
            logger.warning(
                "Task %s falls back to the generic solver: %s", task.name, exc
            )
            self.solvers[task.name] = fallback_solver()
            return self.solvers[task.name].solve(inp)

    def _round(
        self, iteration: int, current: dict[int, float]
    ) -> dict[str, SolverResult]:
        """Solve every task once; update multipliers per relation when ready."""
        alpha = self.schedule.alpha(iteration)
        waiting = {r: self.registry.tasks_of(r) for r in self.registry.relations()}
        results: dict[str, SolverResult] = {}

        def collect(name: str, result: SolverResult) -> None:
            results[name] = result
            self.outputs[name] = result.values
            self.registry.record(name, result.values)
            for relation, names in waiting.items():
                if name in names:
                    names.discard(name)
                    if not names:
                        update_multipliers(self.registry, self.store, alpha, relation)

        if iteration == 0 or self.config.workers <= 1:
            for task in self.tasks:
                inp = self.task_input(task, iteration, current)
                collect(task.name, self.solve(task, inp))
                if iteration == 0:
                    current.update(results[task.name].values)
        else:
            inputs = {
                t.name: self.task_input(t, iteration, current) for t in self.tasks
            }
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                futures = {
                    pool.submit(self.solve, t, inputs[t.name]): t.name
                    for t in self.tasks
                }
                for future in as_completed(futures):
                    collect(futures[future], future.result())
        for task in self.tasks:
            current.update(results[task.name].values)
        return results

    def finalize(self) -> dict[int, float]:
        """
        Pick each atom's value from the last task in schedule order that holds
        it, preferring tasks that mention its relation; marginal mode averages
        the copies of shared atoms instead.
        """
        default = 0.5 if self.mode == constants.MODE_MARGINAL else 0.0
        values = {atom.id: default for atom in self.db.atoms}
        holders: dict[int, list[Task]] = defaultdict(list)
        for task in self.tasks:
            for atom in self.variables[task.name]:
                holders[atom].append(task)
        for atom, tasks in holders.items():
            relation = self.db.atoms[atom].predicate
            shared = atom in self.registry.participants
            if self.mode == constants.MODE_MARGINAL and shared:
                values[atom] = self.registry.mean(atom)
                continue
            mentioning = [t for t in tasks if relation in t.relations] or tasks
            values[atom] = self.outputs[mentioning[-1].name][atom]
        return values

    def world(self, values: Mapping[int, float]) -> np.ndarray:
        marks = threshold(values)
        return np.array([marks[a.id] for a in self.db.atoms], dtype=bool)

    def dual_value(
        self, results: Mapping[str, SolverResult], offsets: Mapping[str, float]
    ) -> float:
        total = self.db.offset + sum(r.cost for r in results.values())
        return total - sum(offsets.values())

    def run(self) -> InferenceResult:
        """
        Raises:
            InfeasibleTaskError: Evidence alone violates a hard rule.
        """
        if math.isinf(self.db.offset):
            raise InfeasibleTaskError("The evidence violates a hard rule")
        stats = ConvergenceStats()
        current: dict[int, float] = {}
        best_cost = math.inf
        best_values: dict[int, float] = {}
        for iteration in range(max(1, self.config.max_iterations)):
            alpha = self.schedule.alpha(iteration)
            offsets = {t.name: self.store.offset(t.name) for t in self.tasks}
            results = self._round(iteration, current)
            values = self.finalize()
            cost = world_cost(self.db, self.world(values))
            if iteration == 0 or cost < best_cost:
                best_cost, best_values = cost, values
            record = IterationRecord(
                iteration,
                alpha,
                self.registry.rmse(),
                self.registry.disagreement(self._tolerance()),
                self.dual_value(results, offsets),
                best_cost,
            )
            stats.records.append(record)
            logger.debug(
                "Round %d: alpha %.4f rmse %.6f disagreement %.4f dual %s best %s",
                record.k,
                record.alpha,
                record.rmse,
                record.disagreement,
                record.dual,
                record.best_primal,
                extra={"iteration": record.k},
            )
            if record.disagreement <= self.config.threshold:
                stats.stop_reason = STOP_AGREEMENT
                break
        else:
            stats.stop_reason = STOP_BUDGET

        if self.mode == constants.MODE_MARGINAL:
            best_values = self.finalize()
            best_cost = world_cost(self.db, self.world(best_values))
        last = stats.records[-1]
        # Only MAP output is checked against the hard rules.
        feasible = self.mode == constants.MODE_MARGINAL or (
            not math.isinf(best_cost)
            and hard_feasible(self.db.clauses, self.world(best_values))
        )
        stats.certified = (
            self.mode == constants.MODE_MAP
            and feasible
            and last.disagreement == 0
            and math.isclose(last.dual, last.best_primal, rel_tol=1e-9, abs_tol=1e-9)
        )
        if not feasible:
            logger.warning("No output world satisfies every hard rule")
        logger.info(
            "%s inference stopped after %d round(s) (%s); cost %s%s",
            self.mode.upper(),
            stats.iterations,
            stats.stop_reason,
            best_cost,
            ", certified optimal" if stats.certified else "",
        )
        return InferenceResult(
            self.mode,
            best_values,
            best_cost,
            feasible,
            stats,
            {name: solver.name for name, solver in self.solvers.items()},
        )

    def _tolerance(self) -> float:
        if self.mode == constants.MODE_MARGINAL:
            return constants.MARGINAL_AGREEMENT
        return 0.0


def run_map(
    program: MLNProgram,
    db: GroundDatabase,
    plan: LogicalPlan,
    config: MasterConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> InferenceResult:
    return Master(program, db, plan, constants.MODE_MAP, config, solver_config).run()


def run_marginal(
    program: MLNProgram,
    db: GroundDatabase,
    plan: LogicalPlan,
    config: MasterConfig | None = None,
    solver_config: SolverConfig | None = None,
) -> InferenceResult:
    master = Master(program, db, plan, constants.MODE_MARGINAL, config, solver_config)
    return master.run()
