"""
Exhaustive reference implementations used to check the real solvers.

Worlds are enumerated in lexicographic order (atom 0 is the most significant
bit) in numpy chunks, so the first minimum found is the lexicographically
least optimal world.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterator
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
from scipy.special import logsumexp

from core import constants
from core.types import InfeasibleTaskError, InstanceTooLargeError

from .grounding import ClauseSink, check_domains, substitute, variable_domains
from .types import GroundDatabase, World

if TYPE_CHECKING:
    from parsing.program import MLNProgram

logger = logging.getLogger(__name__)

CHUNK_BITS = 16

BoolArray = npt.NDArray[np.bool_]
FloatArray = npt.NDArray[np.float64]


def _world_chunks(
    db: GroundDatabase,
) -> Iterator[tuple[BoolArray, FloatArray, BoolArray]]:
    """Yield (worlds, soft costs, hard-feasible mask) per chunk of worlds."""
    n = db.num_atoms
    total = 1 << n
    chunk = 1 << min(n, CHUNK_BITS)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total), dtype=np.int64)
        worlds = ((index[:, None] >> shifts[None, :]) & 1).astype(bool)
        base = 0.0 if math.isinf(db.offset) else float(db.offset)
        cost = np.full(len(index), base)
        feasible = np.full(len(index), not math.isinf(db.offset))
        for clause in db.clauses:
            if clause.weight == 0:
                continue
            satisfied = np.zeros(len(index), dtype=bool)
            for atom, positive in clause.literals:
                satisfied |= worlds[:, atom] == positive
            violated = ~satisfied if clause.weight > 0 else satisfied
            if clause.hard:
                feasible &= ~violated
            else:
                cost += np.where(violated, abs(clause.weight), 0.0)
        yield worlds, cost, feasible


def brute_force_map(db: GroundDatabase) -> tuple[World, float]:
    """
    Exhaustive MAP.

    Returns:
        The lexicographically least minimum-cost world and its cost (infinite
        when no world satisfies the hard clauses).

    Raises:
        InstanceTooLargeError: More than 25 atoms.
    """
    if db.num_atoms > constants.MAX_MAP_ORACLE_ATOMS:
        raise InstanceTooLargeError(
            f"{db.num_atoms} atoms exceed the MAP oracle limit "
            f"of {constants.MAX_MAP_ORACLE_ATOMS}"
        )
    best_world = db.empty_world()
    best_cost = math.inf
    for worlds, cost, feasible in _world_chunks(db):
        masked = np.where(feasible, cost, np.inf)
        position = int(np.argmin(masked))
        if masked[position] < best_cost:
            best_cost = float(masked[position])
            best_world = worlds[position].copy()
    return best_world, best_cost


def brute_force_marginals(db: GroundDatabase) -> npt.NDArray[np.float64]:
    """
    Exact marginals ``Pr[x_a = 1]`` with ``Pr[world] ~ exp(-cost)``.

    Raises:
        InstanceTooLargeError: More than 20 atoms.
        InfeasibleTaskError: No world satisfies the hard clauses.
    """
    if db.num_atoms > constants.MAX_MARGINAL_ORACLE_ATOMS:
        raise InstanceTooLargeError(
            f"{db.num_atoms} atoms exceed the marginal oracle limit "
            f"of {constants.MAX_MARGINAL_ORACLE_ATOMS}"
        )
    log_z = -math.inf
    log_true = np.full(db.num_atoms, -math.inf)
    with np.errstate(divide="ignore"):
        for worlds, cost, feasible in _world_chunks(db):
            log_weight = np.where(feasible, -cost, -np.inf)
            if not np.isfinite(log_weight).any():
                continue
            log_z = np.logaddexp(log_z, logsumexp(log_weight))
            for atom in range(db.num_atoms):
                mask = worlds[:, atom] & feasible
                if mask.any():
                    log_true[atom] = np.logaddexp(
                        log_true[atom], logsumexp(log_weight[mask])
                    )
    if math.isinf(log_z):
        raise InfeasibleTaskError("No world satisfies the hard clauses")
    return np.exp(log_true - log_z)


def ground_naive(program: MLNProgram) -> GroundDatabase:
    """
    Ground by enumerating every substitution, then simplifying.

    Produces the same clauses (in the same order) and offset as
    :func:`logic.grounding.ground`, without using evidence to prune.
    """
    check_domains(program)
    domains = program.active_domains()
    evidence = program.true_evidence()
    sink = ClauseSink()
    for clause in program.rules:
        types = variable_domains(program, clause)
        variables = clause.variables()
        pools = [domains.get(types[var], []) for var in variables]
        for values in itertools.product(*pools):
            binding = dict(zip(variables, values))
            literals = substitute(program, clause, binding, evidence)
            if literals is None:
                if clause.weight < 0:
                    sink.add_constant(clause.weight)
                continue
            sink.emit(clause, literals)
    return sink.build(program.predicate_order(), evidence)


def naive_world_cost(db: GroundDatabase, world: World) -> float:
    """Clause-by-clause truth-table evaluation of the cost, without shortcuts."""
    total = db.offset
    for clause in db.clauses:
        truth = False
        for atom, positive in clause.literals:
            truth = truth or (bool(world[atom]) if positive else not bool(world[atom]))
        if (clause.weight > 0 and not truth) or (clause.weight < 0 and truth):
            total += abs(clause.weight)
    return total
