"""
Unit tests for coreference by correlation clustering.
"""

# Copyright 2025 Enveng Group.
# SPDX-License-Identifier: AGPL-3.0-or-later

import itertools
import math

import numpy as np
import pytest
from core.types import InfeasibleTaskError, SolverError
from logic.grounding import ground
from master.engine import Master
from relational.optimizer import set_partitions
from solvers.coref import (
    CorefGraph,
    CorefSolver,
    UnionFind,
    disagreement_cost,
    pair,
    solve_coref,
)

NODES = ("A", "B", "C", "D")


def optimum(graph):
    """Lowest disagreement cost over every partition of the nodes."""
    best = math.inf
    for blocks in set_partitions(list(graph.nodes)):
        labels = {node: i for i, block in enumerate(blocks) for node in block}
        best = min(best, disagreement_cost(graph.weights, labels))
    return best


def random_graph(seed, size=5):
    """A complete graph with random soft weights."""
    rng = np.random.default_rng(seed)
    nodes = tuple(f"M{i}" for i in range(size))
    weights = {
        (a, b): float(rng.choice([-2.0, -1.0, 1.0, 2.0]))
        for a, b in itertools.combinations(nodes, 2)
    }
    return CorefGraph(nodes, weights)


class TestUnionFind:
    """Disjoint sets."""

    def test_union_and_groups(self):
        """Unions merge groups; untouched items stay alone."""
        components = UnionFind(NODES)
        components.union("A", "B")
        components.union("B", "C")
        assert components.find("A") == components.find("C")
        groups = sorted(components.groups().values())
        assert groups == [["A", "B", "C"], ["D"]]

    def test_union_is_idempotent(self):
        """Joining members of one group changes nothing."""
        components = UnionFind(NODES)
        root = components.union("A", "B")
        assert components.union("B", "A") == root


class TestCorefGraph:
    """Edge validation."""

    def test_self_edge(self):
        """A mention has no pair with itself."""
        with pytest.raises(SolverError):
            CorefGraph(NODES, {("A", "A"): 1.0})

    def test_edges_are_canonical(self):
        """Pairs are keyed in sorted order."""
        assert pair("B", "A") == ("A", "B")
        with pytest.raises(SolverError):
            CorefGraph(NODES, {("B", "A"): 1.0})

    def test_edges_stay_in_the_node_set(self):
        """Both ends of an edge are nodes."""
        with pytest.raises(SolverError):
            CorefGraph(("A",), {("A", "Z"): 1.0})

    def test_neighbours_are_positive_edges(self):
        """The neighbour view returns positive neighbours only."""
        graph = CorefGraph(NODES, {("A", "B"): 2.0, ("A", "C"): -1.0, ("A", "D"): 1.0})
        assert graph.neighbours("A") == ["B", "D"]
        assert graph.neighbours("C") == []


def test_disagreement_cost():
    """Separated positives and merged negatives are charged."""
    weights = {("A", "B"): 3.0, ("A", "C"): -2.0, ("B", "C"): 1.0}
    assert disagreement_cost(weights, {"A": 0, "B": 0, "C": 0}) == 2.0
    assert disagreement_cost(weights, {"A": 0, "B": 1, "C": 1}) == 3.0
    assert disagreement_cost(weights, {"A": 0, "B": 0, "C": 1}) == 1.0


class TestSolveCoref:
    """Pivot clustering."""

    def test_separable_instance_is_solved_exactly(self):
        """Two tight groups repelling each other are recovered."""
        graph = CorefGraph(
            NODES,
            {
                ("A", "B"): 3.0,
                ("C", "D"): 2.0,
                ("A", "C"): -1.0,
                ("B", "D"): -1.0,
                ("A", "D"): -4.0,
            },
        )
        for seed in range(5):
            clustering = solve_coref(graph, seed)
            assert clustering.clusters == (("A", "B"), ("C", "D"))
            assert clustering.cost == optimum(graph) == 0.0

    def test_must_links_are_contracted(self):
        """A chain of must-links ends in one cluster."""
        graph = CorefGraph(
            NODES, {("A", "B"): math.inf, ("B", "C"): math.inf, ("C", "D"): -1.0}
        )
        clustering = solve_coref(graph)
        assert ("A", "B", "C") in clustering.clusters
        assert clustering.cost == 0.0

    def test_cannot_links_are_respected(self):
        """A cannot-link pair is never merged, whatever the soft weights."""
        graph = CorefGraph(
            ("A", "B", "C"),
            {("A", "B"): 5.0, ("B", "C"): 5.0, ("A", "C"): -math.inf},
        )
        for seed in range(5):
            labels = solve_coref(graph, seed).labels()
            assert labels["A"] != labels["C"]

    def test_conflicting_hard_links(self):
        """Must-links joining a cannot-link pair are infeasible."""
        graph = CorefGraph(
            ("A", "B", "C"),
            {("A", "B"): math.inf, ("B", "C"): math.inf, ("A", "C"): -math.inf},
        )
        with pytest.raises(InfeasibleTaskError):
            solve_coref(graph)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_graphs(self, seed):
        """The output partitions the nodes and reports its own cost."""
        graph = random_graph(seed)
        clustering = solve_coref(graph, seed)
        members = sorted(n for cluster in clustering.clusters for n in cluster)
        assert members == sorted(graph.nodes)
        assert clustering.cost == disagreement_cost(graph.weights, clustering.labels())
        assert clustering.cost >= optimum(graph)

    def test_seed_makes_runs_repeatable(self):
        """The same seed gives the same clusters."""
        graph = random_graph(3, size=7)
        assert solve_coref(graph, 42) == solve_coref(graph, 42)


class TestCorefTask:
    """The solver on the coreference task of the affiliation program."""

    @pytest.fixture(name="coref_result")
    def coref_result_fixture(self, affiliation, affiliation_plan):
        """Solve the coreference task once from empty copies."""
        db = ground(affiliation)
        master = Master(affiliation, db, affiliation_plan)
        task = affiliation_plan.task("coref:pCoref")
        return db, CorefSolver().solve(master.task_input(task, 0, {}))

    def test_hard_similarity_merges(self, coref_result):
        """Strong name similarity puts mentions together."""
        db, result = coref_result
        assert result.values[db.atom_id("pCoref", ("Ullman", "Jeff Ullman"))] == 1.0
        assert result.values[db.atom_id("pCoref", ("Gray", "J. Gray"))] == 1.0

    def test_soft_similarity_needs_shared_affiliation(self, coref_result):
        """Without affiliations the soft rule has nothing to fire on."""
        db, result = coref_result
        assert result.values[db.atom_id("pCoref", ("Mike", "Joe"))] == 0.0

    def test_output_is_an_equivalence(self, coref_result):
        """Clusters satisfy the hard reflexivity, symmetry and transitivity."""
        db, result = coref_result
        assert result.feasible
        assert result.values[db.atom_id("pCoref", ("Joe", "Joe"))] == 1.0
        assert result.values[db.atom_id("pCoref", ("Jeff Ullman", "Ullman"))] == 1.0


@pytest.mark.slow
@pytest.mark.parametrize(
    ("magnitudes", "factor"), [((1.0,), 3.0), ((1.0, 1.5, 2.0), 6.0)]
)
def test_pivot_stays_within_approximation_factor(magnitudes, factor):
    """Averaged over pivot orders, the cost stays within a constant of OPT."""
    rng = np.random.default_rng(11)
    for size in (5, 7):
        nodes = tuple(f"M{i}" for i in range(size))
        weights = {
            (a, b): float(rng.choice(magnitudes) * rng.choice([-1.0, 1.0]))
            for a, b in itertools.combinations(nodes, 2)
        }
        graph = CorefGraph(nodes, weights)
        mean = np.mean([solve_coref(graph, seed).cost for seed in range(200)])
        assert mean <= factor * optimum(graph) + 1e-9
