"""
Correlated classification: objects linked into chains by an evidence
relation, solved as linear-chain CRFs.

Objects are the key values of the owned relation. Object ``s`` precedes
``s'`` when they agree on every key position except the chain position
``j`` and ``T(s[j], s'[j])`` holds. MAP is Viterbi; marginals come from
forward-backward in log space.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.special import logsumexp

from core.types import InfeasibleTaskError, SolverError, UnsupportedStructureError
from logic.types import GroundDatabase

from .base import ConditionalSolver, ReducedClause, TaskInput, penalty_table
from .classification import Label, Slot

logger = logging.getLogger(__name__)

Key = tuple[str, ...]

NO_LABELLING = "Every labelling of the chain violates a hard clause"


@dataclass
class ChainModel:
    """
    Attributes:
        slots: Nodes in chain order.
        unary: Label penalties per node.
        pairwise: Penalty tables between consecutive nodes,
            ``pairwise[i][a, b]`` for labels ``a`` of node ``i`` and ``b`` of
            node ``i + 1``.
    """

    slots: list[Slot]
    unary: list[np.ndarray]
    pairwise: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.unary) != len(self.slots):
            raise SolverError("one unary table per node is required")
        if len(self.pairwise) != max(len(self.slots) - 1, 0):
            raise SolverError("one pair table per consecutive pair is required")
        for i, table in enumerate(self.pairwise):
            expected = (len(self.unary[i]), len(self.unary[i + 1]))
            if table.shape != expected:
                raise SolverError(
                    f"pair table {i} has shape {table.shape}, expected {expected}"
                )

    def sequence_cost(self, labels: Sequence[int]) -> float:
        total = sum(float(self.unary[i][l]) for i, l in enumerate(labels))
        total += sum(
            float(self.pairwise[i][labels[i], labels[i + 1]])
            for i in range(len(labels) - 1)
        )
        return total


def viterbi(model: ChainModel) -> tuple[list[int], float]:
    """
    Minimum-cost label sequence.

    Cost-to-go tables are computed from the end, then labels are chosen from
    the front taking the first minimizer, which yields the lexicographically
    smallest optimal sequence.
    """
    n = len(model.slots)
    if n == 0:
        return [], 0.0
    togo: list[np.ndarray] = [np.zeros(0)] * n
    togo[-1] = np.asarray(model.unary[-1], dtype=float)
    for i in range(n - 2, -1, -1):
        ahead = np.min(model.pairwise[i] + togo[i + 1][None, :], axis=1)
        togo[i] = model.unary[i] + ahead
    labels = [int(np.argmin(togo[0]))]
    best = float(togo[0][labels[0]])
    if np.isinf(best):
        raise InfeasibleTaskError(NO_LABELLING)
    for i in range(1, n):
        scores = model.pairwise[i - 1][labels[-1], :] + togo[i]
        labels.append(int(np.argmin(scores)))
    return labels, best


def forward_backward(model: ChainModel) -> list[np.ndarray]:
    """Per-node label marginals of ``exp(-cost)``."""
    n = len(model.slots)
    if n == 0:
        return []
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha = [-np.asarray(model.unary[0], dtype=float)]
        for i in range(1, n):
            incoming = logsumexp(alpha[-1][:, None] - model.pairwise[i - 1], axis=0)
            alpha.append(-model.unary[i] + incoming)
        beta = [np.zeros(len(model.unary[-1]))]
        for i in range(n - 2, -1, -1):
            outgoing = -model.pairwise[i] + (beta[0] - model.unary[i + 1])[None, :]
            beta.insert(0, logsumexp(outgoing, axis=1))
        log_z = logsumexp(alpha[-1])
        if np.isinf(log_z):
            raise InfeasibleTaskError(NO_LABELLING)
        return [np.exp(a + b - log_z) for a, b in zip(alpha, beta)]


def build_chains(
    db: GroundDatabase,
    reduced: Sequence[ReducedClause],
    owned: Sequence[int],
    key: Sequence[int],
    position: int,
    links: frozenset[tuple[str, ...]],
) -> list[ChainModel]:
    """
    Split the owned atoms into chains and compute their potentials.

    Raises:
        UnsupportedStructureError: The objects form a tree rather than
            chains, or a clause spans objects that are not neighbours.
    """
    groups: dict[tuple[str, ...], list[int]] = defaultdict(list)
    for atom in owned:
        args = db.atoms[atom].args
        groups[tuple(args[i] for i in key)].append(atom)
    boolean = bool(owned) and len(key) == len(db.atoms[owned[0]].args)
    slots: dict[tuple[str, ...], Slot] = {}
    slot_of: dict[int, tuple[str, ...]] = {}
    for values, atoms in sorted(groups.items()):
        atoms.sort(key=lambda a: db.atoms[a].args)
        predicate = db.atoms[atoms[0]].predicate
        slots[values] = Slot(f"{predicate}[{', '.join(values)}]", tuple(atoms), boolean)
        slot_of.update((a, values) for a in atoms)

    j = list(key).index(position)
    graph = nx.DiGraph()
    graph.add_nodes_from(slots)
    by_rest: dict[tuple[str, ...], list[tuple[str, ...]]] = defaultdict(list)
    for values in slots:
        by_rest[values[:j] + values[j + 1 :]].append(values)
    for members in by_rest.values():
        for a in members:
            for b in members:
                if a != b and (a[j], b[j]) in links:
                    graph.add_edge(a, b)
    branching = any(d > 1 for _, d in graph.in_degree()) or any(
        d > 1 for _, d in graph.out_degree()
    )
    if branching or not nx.is_directed_acyclic_graph(graph):
        raise UnsupportedStructureError("Linked objects do not form simple chains")

    unary: dict[tuple[str, ...], list[ReducedClause]] = defaultdict(list)
    pair: dict[tuple[Key, Key], list[ReducedClause]] = defaultdict(list)
    for clause in reduced:
        touched = sorted({slot_of[a] for a in clause.atoms()})
        if len(touched) == 1:
            unary[touched[0]].append(clause)
        elif len(touched) == 2 and graph.has_edge(touched[0], touched[1]):
            pair[(touched[0], touched[1])].append(clause)
        elif len(touched) == 2 and graph.has_edge(touched[1], touched[0]):
            pair[(touched[1], touched[0])].append(clause)
        else:
            raise UnsupportedStructureError(
                f"Rule {clause.rule} couples objects that are not chain neighbours"
            )

    models = []
    starts = sorted(v for v in slots if graph.in_degree(v) == 0)
    for start in starts:
        path = [start]
        while graph.out_degree(path[-1]):
            path.append(next(iter(graph.successors(path[-1]))))
        nodes = [slots[v] for v in path]
        models.append(
            ChainModel(
                nodes,
                [
                    penalty_table(unary[v], [s.assignment(l) for l in s.labels()])
                    for v, s in zip(path, nodes)
                ],
                [
                    _pair_table(pair[(a, b)], slots[a], slots[b])
                    for a, b in zip(path, path[1:])
                ],
            )
        )
    return models


def _pair_table(clauses: list[ReducedClause], first: Slot, second: Slot) -> np.ndarray:
    left, right = first.labels(), second.labels()
    table = np.zeros((len(left), len(right)))
    for a, la in enumerate(left):
        for b, lb in enumerate(right):
            joint = {**first.assignment(la), **second.assignment(lb)}
            table[a, b] = penalty_table(clauses, [joint])[0]
    return table


def _label_values(slot: Slot, label: Label) -> dict[int, float]:
    return {a: 1.0 if a == label else 0.0 for a in slot.atoms}


def solve_chain_map(model: ChainModel) -> tuple[dict[int, float], float]:
    labels, cost = viterbi(model)
    values: dict[int, float] = {}
    for slot, choice in zip(model.slots, labels):
        values.update(_label_values(slot, slot.labels()[choice]))
    return values, cost


def solve_chain_marginal(model: ChainModel) -> dict[int, float]:
    values: dict[int, float] = {}
    for slot, probs in zip(model.slots, forward_backward(model)):
        for label, p in zip(slot.labels(), probs):
            if label is not None:
                values[label] = float(p)
    return values


class ChainSolver(ConditionalSolver):
    name = "chain"

    def _models(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> list[ChainModel]:
        chain = inp.task.chain
        if chain is None:
            raise UnsupportedStructureError(
                f"Task {inp.task.name} has no chain structure"
            )
        return build_chains(
            inp.db, reduced, owned, inp.task.key, chain.position, inp.link_rows
        )

    def solve_owned_map(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]:
        values: dict[int, float] = {}
        for model in self._models(inp, reduced, owned):
            found, _ = solve_chain_map(model)
            values.update(found)
        return values

    def solve_owned_marginal(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]:
        values: dict[int, float] = {}
        for model in self._models(inp, reduced, owned):
            values.update(solve_chain_marginal(model))
        return values
