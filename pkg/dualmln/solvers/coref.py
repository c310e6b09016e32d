"""
Coreference as correlation clustering.

Pairs of mentions carry a weight ``β``: positive when they are likely the same
object, negative otherwise, ``±inf`` for must-link and cannot-link. A
clustering pays ``β`` for every positive pair it separates and ``|β|`` for
every negative pair it merges (the disagreement cost). Must-links are
contracted with a union-find first; the contracted graph is then clustered by
randomized pivoting, fetching each pivot's positive neighbours through a
bound-probe view over the edge relation.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from compiler.properties import is_ref, is_sym, is_trn
from core.types import InfeasibleTaskError, SolverError, UnsupportedStructureError
from logic.types import Variable
from relational.optimizer import choose_plan
from relational.relation import Catalog, Relation
from relational.views import (
    AdornedView,
    MaterializedView,
    Subgoal,
    eval_bound,
    materialize,
)

from .base import ConditionalSolver, ReducedClause, TaskInput

logger = logging.getLogger(__name__)

Pair = tuple[str, str]

EDGE_RELATION = "coref_edges"


def pair(a: str, b: str) -> Pair:
    return (a, b) if a <= b else (b, a)


class UnionFind:
    """Disjoint sets over hashable items, with path compression and union by rank."""

    def __init__(self, items: Iterable[str] = ()) -> None:
        self.parent: dict[str, str] = {}
        self.rank: dict[str, int] = {}
        for item in items:
            self.add(item)

    def add(self, item: str) -> None:
        if item not in self.parent:
            self.parent[item] = item
            self.rank[item] = 0

    def find(self, item: str) -> str:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: str, b: str) -> str:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return ra

    def groups(self) -> dict[str, list[str]]:
        found: dict[str, list[str]] = defaultdict(list)
        for item in sorted(self.parent):
            found[self.find(item)].append(item)
        return dict(found)


def neighbour_view(access_count: float = 1.0) -> AdornedView:
    """``nbr^bf(x, y) <- coref_edges(x, y)``."""
    x, y = Variable("x"), Variable("y")
    return AdornedView(
        "nbr", (x, y), "bf", (Subgoal(EDGE_RELATION, (x, y)),), (), access_count
    )


@dataclass
class CorefGraph:
    """
    Attributes:
        nodes: Mention constants.
        weights: ``β`` per unordered pair, keyed ``(min, max)``; absent pairs
            weigh 0.
    """

    nodes: tuple[str, ...]
    weights: dict[Pair, float] = field(default_factory=dict)
    _oracle: tuple[AdornedView, MaterializedView] | None = field(
        default=None, init=False, repr=False
    )

    def __post_init__(self) -> None:
        known = set(self.nodes)
        for (a, b), weight in self.weights.items():
            if a == b:
                raise SolverError(f"Self edge on {a}")
            if (a, b) != pair(a, b):
                raise SolverError(f"Edge ({a}, {b}) is not in canonical order")
            if a not in known or b not in known:
                raise SolverError(f"Edge ({a}, {b}) leaves the node set")
            if math.isnan(weight):
                raise SolverError(f"Edge ({a}, {b}) has an undefined weight")

    def weight(self, a: str, b: str) -> float:
        return self.weights.get(pair(a, b), 0.0)

    def edge_relation(self) -> Relation:
        """Positive edges in both directions."""
        relation = Relation(EDGE_RELATION, 2)
        for (a, b), weight in sorted(self.weights.items()):
            if weight > 0:
                relation.add((a, b))
                relation.add((b, a))
        return relation

    def estimated_degree(self) -> float:
        positive = sum(1 for w in self.weights.values() if w > 0)
        return max(2.0 * positive / len(self.nodes), 1.0) if self.nodes else 1.0

    def neighbours(self, node: str) -> list[str]:
        """Positive-weight neighbours, answered by the bound probe view."""
        if self._oracle is None:
            relation = self.edge_relation()
            catalog = Catalog([relation])
            count = max(len(self.nodes) / self.estimated_degree(), 1.0)
            view = neighbour_view(count)
            plan = choose_plan(view, catalog.stats())
            self._oracle = (view, materialize(view, plan, catalog))
        view, done = self._oracle
        return sorted(row[0] for row in eval_bound(view, done, (node,)))


@dataclass
class Clustering:
    clusters: tuple[tuple[str, ...], ...]
    cost: float

    def labels(self) -> dict[str, int]:
        return {node: i for i, members in enumerate(self.clusters) for node in members}


def disagreement_cost(
    weights: Mapping[Pair, float], labels: Mapping[str, int]
) -> float:
    """Separated positive pairs cost ``β``; merged negative pairs cost ``|β|``."""
    total = 0.0
    for (a, b), weight in weights.items():
        same = labels[a] == labels[b]
        if weight > 0 and not same:
            total += weight
        elif weight < 0 and same:
            total -= weight
    return total


def _contract(graph: CorefGraph) -> UnionFind:
    components = UnionFind(graph.nodes)
    for (a, b), weight in sorted(graph.weights.items()):
        if weight == math.inf:
            components.union(a, b)
    for (a, b), weight in sorted(graph.weights.items()):
        if weight == -math.inf and components.find(a) == components.find(b):
            raise InfeasibleTaskError(
                f"{a} and {b} are forced together and apart by hard rules"
            )
    return components


def solve_coref(graph: CorefGraph, seed: int = 0) -> Clustering:
    """
    Randomized pivot clustering after contracting must-links.

    A pivot absorbs every unclustered positive neighbour component whose total
    weight to the pivot is positive and that has no cannot-link to what the
    cluster already holds.

    Raises:
        InfeasibleTaskError: A must-link chain joins a cannot-link pair.
    """
    components = _contract(graph)
    members = components.groups()
    between: dict[Pair, float] = defaultdict(float)
    forbidden: set[Pair] = set()
    for (a, b), weight in graph.weights.items():
        ra, rb = components.find(a), components.find(b)
        if ra == rb:
            continue
        if weight == -math.inf:
            forbidden.add(pair(ra, rb))
        elif not math.isinf(weight):
            between[pair(ra, rb)] += weight

    rng = np.random.default_rng(seed)
    remaining = sorted(members)
    clusters: list[tuple[str, ...]] = []
    while remaining:
        pivot = remaining[int(rng.integers(len(remaining)))]
        unclustered = set(remaining)
        candidates = sorted(
            {
                components.find(n)
                for node in members[pivot]
                for n in graph.neighbours(node)
            }
            & unclustered
            - {pivot}
        )
        cluster = [pivot]
        for root in candidates:
            if between[pair(pivot, root)] <= 0:
                continue
            if any(pair(root, held) in forbidden for held in cluster):
                continue
            cluster.append(root)
        taken = set(cluster)
        remaining = [r for r in remaining if r not in taken]
        clusters.append(tuple(sorted(n for root in cluster for n in members[root])))

    clusters.sort()
    labels = {node: i for i, group in enumerate(clusters) for node in group}
    cost = disagreement_cost(graph.weights, labels)
    logger.debug(
        "Pivot clustering: %d node(s), %d cluster(s), cost %s",
        len(graph.nodes),
        len(clusters),
        cost,
    )
    return Clustering(tuple(clusters), cost)


def build_coref_graph(
    inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
) -> CorefGraph:
    """
    Collect ``β`` from the unit clauses over owned atoms.

    Clauses of the rules stating reflexivity, symmetry or transitivity hold by
    construction of a clustering and are skipped.

    Raises:
        UnsupportedStructureError: Another clause couples several pairs, or the
            owned relation is not binary.
    """
    if inp.program is None:
        raise SolverError("Coreference needs the source program")
    relation = inp.task.relation
    structural = {
        i
        for i in inp.task.rules
        if (rule := inp.program.rules[i]).hard
        and (is_ref(rule, relation) or is_sym(rule, relation) or is_trn(rule, relation))
    }
    nodes: set[str] = set()
    for atom in owned:
        args = inp.db.atoms[atom].args
        if len(args) != 2:
            raise UnsupportedStructureError(f"{relation} is not a binary relation")
        nodes.update(args)

    soft: dict[Pair, float] = defaultdict(float)
    must: set[Pair] = set()
    cannot: set[Pair] = set()
    for clause in reduced:
        if clause.rule in structural:
            continue
        if len(clause.literals) != 1:
            raise UnsupportedStructureError(
                f"Rule {clause.rule} couples {len(clause.literals)} pairs"
            )
        atom, positive = clause.literals[0]
        a, b = inp.db.atoms[atom].args
        if a == b:
            continue
        contribution = clause.weight if positive else -clause.weight
        if contribution == math.inf:
            must.add(pair(a, b))
        elif contribution == -math.inf:
            cannot.add(pair(a, b))
        else:
            soft[pair(a, b)] += contribution
    conflicting = must & cannot
    if conflicting:
        a, b = min(conflicting)
        raise InfeasibleTaskError(
            f"{relation}({a}, {b}) is both required and forbidden"
        )
    weights = {p: w for p, w in soft.items() if w != 0}
    weights.update({p: math.inf for p in must})
    weights.update({p: -math.inf for p in cannot})
    return CorefGraph(tuple(sorted(nodes)), weights)


class CorefSolver(ConditionalSolver):
    name = "coref"

    def solve_owned_map(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]:
        graph = build_coref_graph(inp, reduced, owned)
        clustering = solve_coref(graph, inp.seed)
        labels = clustering.labels()
        logger.info(
            "%s: %d mention(s) in %d cluster(s), disagreement %s",
            inp.task.name,
            len(graph.nodes),
            len(clustering.clusters),
            clustering.cost,
        )
        values = {}
        for atom in owned:
            a, b = inp.db.atoms[atom].args
            values[atom] = 1.0 if labels[a] == labels[b] else 0.0
        return values

    def solve_owned_marginal(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]:
        return self.solve_owned_map(inp, reduced, owned)
