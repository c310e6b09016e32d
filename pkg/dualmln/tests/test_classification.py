"""
Unit tests for the classification solver.
"""

# Copyright 2025 Enveng Group.
# SPDX-License-Identifier: AGPL-3.0-or-later

import itertools
import math

import numpy as np
import pytest
from compiler.types import Task, TaskKind
from core import constants
from core.types import InfeasibleTaskError, UnsupportedStructureError
from logic.cost import world_cost
from logic.grounding import ground
from logic.oracles import brute_force_map, brute_force_marginals
from logic.types import HARD, GroundAtom, GroundClause, GroundDatabase
from parsing.grammar import parse_evidence, parse_program
from solvers.base import ReducedClause, TaskInput, condition
from solvers.classification import (
    ClassificationInput,
    ClassificationSolver,
    Slot,
    build_classification,
    label_marginals,
    solve_classification_map,
    solve_classification_marginal,
)

RICH = (
    "dom person = {A, B}\n"
    "Rich(person)\n"
    "*Happy(person)\n"
    "2: Rich(p) => Happy(p)\n"
    "-1: Happy(p)\n"
)

HAPPY_TASK = Task(
    "classification:Happy",
    TaskKind.SIMPLE,
    (0, 1),
    ("Happy",),
    ("Happy",),
    key=(0,),
)


@pytest.fixture(name="rich_db")
def rich_db_fixture():
    """Return the ground Rich/Happy database with evidence ``Rich(A)``."""
    return ground(parse_evidence("Rich(A)\n", parse_program(RICH)))


def task_input(db, mode=constants.MODE_MAP):
    """Build the input of the single classification task over ``db``."""
    return TaskInput(
        task=HAPPY_TASK,
        db=db,
        clauses=db.clauses,
        variables=tuple(atom.id for atom in db.atoms),
        mode=mode,
    )


class TestFromFeatures:
    """Boolean instances from a feature model."""

    def test_penalties(self):
        """Positive features cost on exclusion, negative ones on inclusion."""
        ci = ClassificationInput.from_features(
            {"strong": 8.0, "weak": -2.0},
            {0: ["strong"], 1: ["weak"], 2: ["strong", "weak"]},
        )
        assert [table.tolist() for table in ci.penalties] == [
            [0.0, 8.0],
            [2.0, 0.0],
            [2.0, 8.0],
        ]

    def test_map_picks_the_cheaper_label(self):
        """Each object takes its own minimum."""
        ci = ClassificationInput.from_features(
            {"strong": 8.0, "weak": -2.0},
            {0: ["strong"], 1: ["weak"], 2: ["strong", "weak"]},
        )
        values, total = solve_classification_map(ci)
        assert values == {0: 1.0, 1: 0.0, 2: 1.0}
        assert total == 2.0

    def test_forbidding_feature(self):
        """A ``-inf`` feature rules inclusion out."""
        ci = ClassificationInput.from_features({"never": -math.inf}, {0: ["never"]})
        values, _ = solve_classification_map(ci)
        assert values == {0: 0.0}

    def test_repeated_features_count_once(self):
        """The instance is a set of pairs."""
        ci = ClassificationInput.from_features({"f": 3.0}, {0: ["f", "f"]})
        assert ci.penalties[0].tolist() == [0.0, 3.0]


class TestMultiClass:
    """Objects choosing among several classes or none."""

    def test_labels_put_none_first(self):
        """Multi-class slots try ``⊥`` before their classes."""
        slot = Slot("label[D, P1]", (3, 4), False)
        assert slot.labels() == [None, 3, 4]
        assert slot.assignment(4) == {3: False, 4: True}

    def test_map_and_ties(self):
        """The first minimal label wins."""
        slot = Slot("label[D, P1]", (3, 4), False)
        values, total = solve_classification_map(
            ClassificationInput([slot], [np.array([1.0, 0.5, 0.5])])
        )
        assert values == {3: 1.0, 4: 0.0}
        assert total == 0.5

    def test_marginals_sum_to_one_with_none(self):
        """Class probabilities plus ``⊥`` add up to one."""
        slot = Slot("label[D, P1]", (3, 4), False)
        table = np.array([0.0, 1.0, 2.0])
        values = solve_classification_marginal(ClassificationInput([slot], [table]))
        probs = label_marginals(table)
        assert values[3] == pytest.approx(probs[1])
        assert values[4] == pytest.approx(probs[2])
        assert probs.sum() == pytest.approx(1.0)

    def test_all_labels_infeasible(self):
        """An object with no feasible label makes the task infeasible."""
        slot = Slot("label[D, P1]", (3, 4), False)
        ci = ClassificationInput([slot], [np.array([math.inf, math.inf, math.inf])])
        with pytest.raises(InfeasibleTaskError):
            solve_classification_map(ci)
        with pytest.raises(InfeasibleTaskError):
            solve_classification_marginal(ci)


class TestSolver:
    """The solver on a ground program."""

    def test_map(self, rich_db):
        """The rich person is happy; the other is not."""
        result = ClassificationSolver().solve(task_input(rich_db))
        happy_a = rich_db.atom_id("Happy", ("A",))
        happy_b = rich_db.atom_id("Happy", ("B",))
        assert result.values[happy_a] == 1.0
        assert result.values[happy_b] == 0.0
        assert result.cost == 1.0
        assert result.feasible

    def test_marginals_match_enumeration(self, rich_db):
        """Independent objects give exact marginals."""
        result = ClassificationSolver().solve(
            task_input(rich_db, constants.MODE_MARGINAL)
        )
        expected = brute_force_marginals(rich_db)
        for atom in rich_db.atoms:
            assert result.values[atom.id] == pytest.approx(expected[atom.id])

    def test_coupled_objects_are_unsupported(self, rich_db):
        """A clause spanning two objects does not fit the model."""
        happy_a = rich_db.atom_id("Happy", ("A",))
        happy_b = rich_db.atom_id("Happy", ("B",))
        coupling = ReducedClause(1.0, ((happy_a, True), (happy_b, True)), 9)
        with pytest.raises(UnsupportedStructureError):
            build_classification(rich_db, [coupling], [happy_a, happy_b], (0,))


def test_condition_fixes_inputs():
    """Fixed atoms shrink clauses and move decided costs into a constant."""
    clauses = [
        GroundClause(2.0, ((0, False), (1, True))),
        GroundClause(-1.0, ((0, True),)),
    ]
    reduced, constant = condition(clauses, {0: 1.0})
    assert reduced == [ReducedClause(2.0, ((1, True),), -1)]
    assert constant == 1.0


def random_objects(rng, objects, classes):
    """
    Ground ``label(O, C)`` atoms with per-object features.

    Multi-class objects get HARD clauses keeping at most one class true;
    every object gets one to four feature clauses over its own atoms and at
    most one HARD feature.
    """
    atoms = tuple(
        GroundAtom(o * classes + c, "label", (f"O{o}", f"C{c}"))
        for o in range(objects)
        for c in range(classes)
    )
    clauses = []
    for o in range(objects):
        own = [o * classes + c for c in range(classes)]
        for a, b in itertools.combinations(own, 2):
            clauses.append(GroundClause(HARD, ((a, False), (b, False))))
        hard_used = False
        for _ in range(int(rng.integers(1, 5))):
            width = int(rng.integers(1, min(2, classes) + 1))
            picked = rng.choice(own, size=width, replace=False)
            chosen = sorted(int(a) for a in picked)
            literals = tuple((a, bool(rng.random() < 0.5)) for a in chosen)
            if not hard_used and rng.random() < 0.1:
                hard_used = True
                weight = HARD
            else:
                weight = float(rng.normal(0.0, 2.0))
            clauses.append(GroundClause(weight, literals))
    return GroundDatabase(atoms, tuple(clauses))


def label_task(classes):
    """Classification task over ``label`` keyed by the object."""
    key = (0,) if classes > 1 else (0, 1)
    return Task(
        "classification:label", TaskKind.SIMPLE, (), ("label",), ("label",), key
    )


def random_input(db, classes, mode=constants.MODE_MAP):
    """Input of the ``label`` task covering every atom of ``db``."""
    return TaskInput(
        task=label_task(classes),
        db=db,
        clauses=db.clauses,
        variables=tuple(atom.id for atom in db.atoms),
        mode=mode,
    )


class TestAgainstOracles:
    """Randomized instances against enumeration."""

    def test_boolean_map(self):
        """Six independent objects reach the enumerated optimum."""
        for seed in range(200):
            db = random_objects(np.random.default_rng(seed), objects=6, classes=1)
            result = ClassificationSolver().solve(random_input(db, 1))
            _, optimum = brute_force_map(db)
            world = np.array([result.values[a.id] >= 0.5 for a in db.atoms])
            assert result.cost == pytest.approx(optimum)
            assert world_cost(db, world) == pytest.approx(optimum)

    def test_multi_class_marginals(self):
        """Up to three classes and four features: exact softmax marginals."""
        for seed in range(200):
            rng = np.random.default_rng(seed)
            classes = int(rng.integers(2, 4))
            db = random_objects(rng, objects=2, classes=classes)
            result = ClassificationSolver().solve(
                random_input(db, classes, constants.MODE_MARGINAL)
            )
            expected = brute_force_marginals(db)
            for atom in db.atoms:
                assert result.values[atom.id] == pytest.approx(
                    expected[atom.id], abs=1e-9
                )

    def test_multi_class_map(self):
        """Multi-class objects pick a cheapest single label."""
        for seed in range(200):
            rng = np.random.default_rng(seed)
            classes = int(rng.integers(2, 4))
            db = random_objects(rng, objects=3, classes=classes)
            result = ClassificationSolver().solve(random_input(db, classes))
            _, optimum = brute_force_map(db)
            assert result.cost == pytest.approx(optimum)


def test_single_feature_closed_form():
    """One object with one feature of weight 2 is in with ``1 / (1 + e^-2)``."""
    ci = ClassificationInput.from_features({"f": 2.0}, {0: ["f"]})
    assert solve_classification_marginal(ci)[0] == pytest.approx(
        1 / (1 + math.exp(-2))
    )
    assert solve_classification_marginal(ci)[0] == pytest.approx(0.8808, abs=1e-4)
