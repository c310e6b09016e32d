"""
Unit tests for property detection, task assignment and the plan dump.
"""

# Copyright 2025 Enveng Group.
# SPDX-License-Identifier: AGPL-3.0-or-later

import pytest
from compiler.explain import explain, format_rules
from compiler.planner import assign_tasks, schedule
from compiler.properties import detect_properties, find_chain, find_key
from compiler.types import ChainSpec, Property, TaskKind
from parsing.grammar import parse_evidence, parse_program

AFFIL_RULES = [5, 6, 7, 8]


class TestProperties:
    """Pattern-based detection over clause form."""

    def test_coreference_properties(self, affiliation):
        """Hard rules make pCoref reflexive, symmetric and transitive."""
        found = detect_properties(affiliation, "pCoref")
        assert {Property.REF, Property.SYM, Property.TRN} <= found

    def test_affil_is_not_recursive_within_its_rules(self, affiliation):
        """affil occurs once per rule among the rules predicting it."""
        assert Property.NOREC in detect_properties(affiliation, "affil", AFFIL_RULES)

    def test_affil_twice_in_a_rule_breaks_norec(self, affiliation):
        """The pCoref feature rule mentions affil twice."""
        assert Property.NOREC not in detect_properties(affiliation, "affil")

    def test_key_rule(self, packers):
        """A functional dependency gives the key positions."""
        assert find_key(packers, "label") == (0, 1)
        assert Property.KEY in detect_properties(packers, "label")

    def test_boolean_relation_has_no_key(self, affiliation):
        """Relations without a key rule are Boolean."""
        assert find_key(affiliation, "affil") is None

    def test_chain(self, chain):
        """The carry-over rule is a chain along ``next``."""
        assert find_chain(chain, "tag") == ChainSpec(position=0, link="next")
        assert Property.TRREC in detect_properties(chain, "tag")

    def test_cyclic_links_are_not_a_chain(self, chain):
        """A cycle in the link relation breaks the chain structure."""
        looped = parse_evidence("next(T5, T1)\n", chain)
        assert find_chain(looped, "tag") is None

    def test_symmetry_with_renamed_variables(self):
        """Variable names and literal order do not matter."""
        program = parse_program(
            "*same(m, m)\ninf: !same(b, a) v same(a, b)\n"
        )
        assert Property.SYM in detect_properties(program, "same")

    def test_reflexivity_through_equality(self):
        """``x = y => p(x, y)`` is reflexivity as well."""
        program = parse_program("*same(m, m)\ninf: x = y => same(x, y)\n")
        assert Property.REF in detect_properties(program, "same")


class TestAssignTasks:
    """Greedy decomposition."""

    def test_affiliation_program(self, affiliation_plan):
        """pCoref gets a coreference task, affil a classification task."""
        coref = affiliation_plan.task("coref:pCoref")
        affil = affiliation_plan.task("classification:affil")
        assert coref.kind is TaskKind.COREF
        assert coref.rules == (0, 1, 2, 3, 4)
        assert affil.kind is TaskKind.SIMPLE
        assert affil.rules == (5, 6, 7, 8)
        assert len(affiliation_plan.tasks) == 2

    def test_soft_rules_are_partitioned(self, affiliation, affiliation_plan):
        """Each soft rule lands in exactly one task."""
        soft = [r.index for r in affiliation.rules if not r.hard]
        placed = [
            i
            for task in affiliation_plan.tasks
            for i in task.rules
            if not affiliation.rules[i].hard
        ]
        assert sorted(placed) == soft

    def test_shared_relations(self, affiliation_plan):
        """Both tasks mention affil and pCoref."""
        assert affiliation_plan.shared_relations() == ["affil", "pCoref"]
        assert affiliation_plan.order == ("coref:pCoref", "classification:affil")

    def test_happy_sad_without_hints_is_generic(self, happy_sad):
        """Happy and Sad depend on each other, so nothing specializes."""
        plan = assign_tasks(happy_sad)
        (task,) = plan.tasks
        assert task.kind is TaskKind.GENERIC
        assert task.rules == (0, 1, 2, 3)
        assert task.owned == ("Happy", "Sad")

    def test_happy_sad_with_hints(self, happy_sad_tasks):
        """``@task`` directives are honored as given."""
        plan = assign_tasks(happy_sad_tasks)
        assert plan.order == ("news", "mood")
        assert plan.task("news").rules == (0,)
        assert plan.task("mood").rules == (1, 2, 3)
        assert all(task.pinned for task in plan.tasks)
        assert plan.shared_relations() == ["Happy"]

    def test_pinned_classification(self, packers):
        """A pinned task owns the query relation its rules predict most."""
        plan = assign_tasks(packers)
        outcome = plan.task("outcome")
        assert outcome.kind is TaskKind.SIMPLE
        assert outcome.owned == ("winner",)
        assert outcome.relations == ("label", "winner")

    def test_chain_program(self, chain):
        """TrREC relations get a correlated classification task."""
        plan = assign_tasks(chain)
        (task,) = plan.tasks
        assert task.kind is TaskKind.CORRELATED
        assert task.chain == ChainSpec(0, "next")
        assert task.key == (0,)

    def test_monolithic(self, affiliation):
        """``monolithic`` puts everything into one generic task."""
        plan = assign_tasks(affiliation, monolithic=True)
        (task,) = plan.tasks
        assert task.kind is TaskKind.GENERIC
        assert task.rules == tuple(range(len(affiliation.rules)))
        assert plan.shared_relations() == []

    def test_schedule_visits_components_in_creation_order(self, affiliation_plan):
        """Traversal starts from the first task in creation order."""
        tasks = list(reversed(affiliation_plan.tasks))
        assert schedule(tasks) == ("classification:affil", "coref:pCoref")


def test_task_kind_aliases():
    """Short names resolve to the solver families."""
    assert TaskKind.parse("chain") is TaskKind.CORRELATED
    assert TaskKind.parse("Simple") is TaskKind.SIMPLE
    with pytest.raises(ValueError):
        TaskKind.parse("quantum")


def test_format_rules_compresses_ranges():
    """Consecutive rule labels collapse into ranges."""
    assert format_rules([0, 1, 2, 5]) == "F1-F3, F6"
    assert format_rules([]) == "-"


def test_explain(affiliation_plan):
    """The dump names every task, its kind and the schedule."""
    text = explain(affiliation_plan)
    assert "coref:pCoref [Coref] rules F1-F5" in text
    assert "classification:affil [SimpleClassification] rules F6-F9" in text
    assert "shared: affil, pCoref" in text
    assert text.endswith("order: coref:pCoref -> classification:affil\n")
