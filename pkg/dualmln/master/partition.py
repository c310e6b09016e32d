"""Independent data partitions of a task: connected components of its ground graph."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import networkx as nx

from logic.types import GroundClause

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Component:
    """
    Attributes:
        atoms: Atom ids, sorted.
        clauses: Positions of the component's clauses in the task problem.
    """

    atoms: tuple[int, ...]
    clauses: tuple[int, ...]


def partition_task(
    clauses: Sequence[GroundClause], atoms: Iterable[int]
) -> list[Component]:
    """
    Split a task into components that share no clause.

    Atoms that no clause mentions form singleton components. Components are
    ordered by their smallest atom id.
    """
    graph = nx.Graph()
    graph.add_nodes_from(atoms)
    for clause in clauses:
        ids = clause.atoms()
        graph.add_nodes_from(ids)
        graph.add_edges_from(zip(ids, ids[1:]))
    owner: dict[int, int] = {}
    groups = sorted(sorted(c) for c in nx.connected_components(graph))
    for number, group in enumerate(groups):
        owner.update((atom, number) for atom in group)
    positions: list[list[int]] = [[] for _ in groups]
    for position, clause in enumerate(clauses):
        if clause.literals:
            positions[owner[clause.literals[0][0]]].append(position)
    components = [
        Component(tuple(group), tuple(found)) for group, found in zip(groups, positions)
    ]
    logger.debug(
        "Partitioned %d atom(s) into %d component(s)",
        graph.number_of_nodes(),
        len(components),
    )
    return components
