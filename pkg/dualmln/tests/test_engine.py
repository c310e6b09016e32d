"""
Integration tests for the master loop over compiled plans.
"""

# Copyright 2025 Enveng Group.
# SPDX-License-Identifier: AGPL-3.0-or-later

import dataclasses
import math

import numpy as np
import pytest
from compiler.planner import assign_tasks
from compiler.types import TaskKind
from core import constants
from core.config import MasterConfig
from core.types import InfeasibleTaskError
from logic.grounding import ground
from logic.oracles import brute_force_map, brute_force_marginals
from master.engine import (
    STOP_AGREEMENT,
    STOP_BUDGET,
    Master,
    run_map,
    run_marginal,
    task_seed,
)
from parsing.grammar import parse_evidence, parse_program

HAPPY, SAD = 0, 1

HEADER = """dom person = {A, B, C}
friends(person, person)
stress(person)
*smokes(person)
*tired(person)
*cancer(person)
"""

RULE_POOL = {
    "first": [
        "stress(x) => smokes(x)",
        "smokes(x) => tired(x)",
        "friends(x, y), smokes(x) => smokes(y)",
        "tired(x)",
    ],
    "second": [
        "smokes(x) => cancer(x)",
        "friends(x, y), cancer(x) => cancer(y)",
        "cancer(x)",
        "smokes(x)",
    ],
}

HARD_RULES = {
    "first": "inf: stress(x) => tired(x)",
    "second": "inf: friends(x, y), cancer(x) => cancer(y)",
}


REGRESSION_PROGRAMS = [
    "mix_classification_generic",
    "mix_coref_classification",
    "mix_chain_classification",
    "mix_generic_generic",
]


def value(db, result, predicate, *args):
    """The output value of one ground atom."""
    return result.values[db.atom_id(predicate, args)]


class TestHappySad:
    """Two tasks sharing the Happy relation."""

    def test_single_task_plan(self, happy_sad, happy_sad_db):
        """A plan without shared atoms stops after one round at the optimum."""
        result = run_map(happy_sad, happy_sad_db, assign_tasks(happy_sad))
        assert result.values == {HAPPY: 1.0, SAD: 0.0}
        assert result.cost == 0
        assert result.stats.iterations == 1
        assert result.stats.stop_reason == STOP_AGREEMENT
        assert result.stats.certified

    def test_two_tasks_agree_on_the_optimum(self, happy_sad_tasks):
        """The copies of Happy(A) agree and the result is certified."""
        db = ground(happy_sad_tasks)
        result = run_map(happy_sad_tasks, db, assign_tasks(happy_sad_tasks))
        assert result.values == {HAPPY: 1.0, SAD: 0.0}
        assert result.cost == 0
        assert result.feasible
        assert result.stats.stop_reason == STOP_AGREEMENT
        assert result.stats.certified
        assert result.solvers == {"news": "generic", "mood": "generic"}

    def test_single_task_marginals_are_exact(self, happy_sad, happy_sad_db):
        """One exact task reproduces the enumerated marginals."""
        result = run_marginal(happy_sad, happy_sad_db, assign_tasks(happy_sad))
        expected = brute_force_marginals(happy_sad_db)
        assert result.values[HAPPY] == pytest.approx(expected[HAPPY])
        assert result.values[SAD] == pytest.approx(expected[SAD])
        assert result.feasible
        assert not result.stats.certified

    def test_two_task_marginals(self, happy_sad_tasks):
        """Averaged copies settle near the enumerated marginals."""
        db = ground(happy_sad_tasks)
        result = run_marginal(
            happy_sad_tasks,
            db,
            assign_tasks(happy_sad_tasks),
            MasterConfig(max_iterations=100),
        )
        expected = brute_force_marginals(db)
        assert result.values[HAPPY] == pytest.approx(expected[HAPPY], abs=0.05)
        assert result.values[SAD] == pytest.approx(expected[SAD], abs=0.05)

    def test_trace_records_every_round(self, happy_sad_tasks):
        """One record per round, numbered from zero."""
        db = ground(happy_sad_tasks)
        result = run_map(
            happy_sad_tasks,
            db,
            assign_tasks(happy_sad_tasks),
            MasterConfig(max_iterations=3, threshold=-1.0),
        )
        assert [r.k for r in result.stats.records] == [0, 1, 2]
        assert result.stats.stop_reason == STOP_BUDGET
        assert all(r.alpha > 0 for r in result.stats.records)


def test_dual_bound_holds_for_exact_tasks(load_bundled):
    """With every task solved exactly, the dual never exceeds the optimum."""
    program = load_bundled("mix_generic_generic")
    db = ground(program)
    _, optimum = brute_force_map(db)
    plan = assign_tasks(program)
    result = run_map(program, db, plan, MasterConfig(max_iterations=20))
    for record in result.stats.records:
        assert record.dual <= optimum + 1e-9
        assert record.best_primal >= optimum - 1e-9
    assert result.cost >= optimum - 1e-9


def test_affiliation_program(affiliation, affiliation_plan):
    """Coreference and affiliation inform each other."""
    db = ground(affiliation)
    result = run_map(affiliation, db, affiliation_plan)
    assert result.feasible
    assert value(db, result, "affil", "Chomsky", "MIT") == 1.0
    assert value(db, result, "pCoref", "Ullman", "Jeff Ullman") == 1.0
    assert value(db, result, "affil", "Ullman", "Stanford") == 1.0
    assert result.solvers == {
        "coref:pCoref": "coref",
        "classification:affil": "classification",
    }


def test_unsupported_structure_falls_back_to_generic(load_bundled):
    """A task whose clauses couple objects is handed to the generic solver."""
    program = load_bundled("mix_generic_generic")
    plan = assign_tasks(program)
    social = dataclasses.replace(plan.task("social"), kind=TaskKind.SIMPLE, key=(0,))
    plan = dataclasses.replace(
        plan, tasks=tuple(social if t.name == "social" else t for t in plan.tasks)
    )
    result = run_map(program, ground(program), plan, MasterConfig(max_iterations=5))
    assert result.solvers["social"] == "generic"


def test_infeasible_evidence():
    """Evidence that breaks a hard rule stops inference."""
    program = parse_program(
        "Rich(person)\n*Happy(person)\ninf: !Rich(p)\n1: Happy(p)\n"
    )
    program = parse_evidence("Rich(A)\n", program)
    db = ground(program)
    assert math.isinf(db.offset)
    with pytest.raises(InfeasibleTaskError):
        run_map(program, db, assign_tasks(program))


def test_unknown_mode(happy_sad, happy_sad_db):
    """Only MAP and marginal inference exist."""
    with pytest.raises(ValueError):
        Master(happy_sad, happy_sad_db, assign_tasks(happy_sad), "mpe")


def test_parallel_rounds_match_sequential(happy_sad_tasks):
    """Worker threads do not change the outcome."""
    db = ground(happy_sad_tasks)
    plan = assign_tasks(happy_sad_tasks)
    sequential = run_map(happy_sad_tasks, db, plan, MasterConfig(workers=1))
    parallel = run_map(happy_sad_tasks, db, plan, MasterConfig(workers=2))
    assert parallel.values == sequential.values
    assert parallel.cost == sequential.cost


def test_task_seeds_differ_per_task_and_round():
    """Seeds are derived from the base seed, the task and the round."""
    seeds = {task_seed(7, t, k) for t in range(3) for k in range(3)}
    assert len(seeds) == 9
    assert task_seed(7, 1, 2) == task_seed(7, 1, 2)


@pytest.mark.slow
def test_marginal_mode_on_mixed_tasks(load_bundled):
    """Classification and generic copies agree on a mixed program."""
    program = load_bundled("mix_classification_generic")
    db = ground(program)
    result = run_marginal(
        program, db, assign_tasks(program), MasterConfig(max_iterations=100)
    )
    for atom in db.atoms:
        assert 0.0 <= result.values[atom.id] <= 1.0
    assert result.mode == constants.MODE_MARGINAL
    assert min(r.rmse for r in result.stats.records) < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("name", REGRESSION_PROGRAMS)
def test_marginal_copies_converge(load_bundled, name):
    """Within a hundred rounds the copies of shared atoms come together."""
    program = load_bundled(name)
    db = ground(program)
    master = Master(
        program,
        db,
        assign_tasks(program),
        constants.MODE_MARGINAL,
        MasterConfig(max_iterations=100),
    )
    stats = master.run().stats
    assert 0 < stats.iterations <= 100
    assert min(r.rmse for r in stats.records) < 0.1


UNIT_RULES = {"tired(x)", "cancer(x)", "smokes(x)"}
UNIT_WEIGHTS = [-2.0, -1.0, 1.0, 1.5, 3.0]
IMPLICATION_WEIGHTS = [1.0, 1.5, 3.0]


def random_two_task_program(seed):
    """
    Two generic tasks sharing ``smokes`` over three people.

    Implications get positive weights and unit rules either sign. Each task
    also carries one hard rule over a relation only that task decides.
    """
    rng = np.random.default_rng(seed)
    lines = [HEADER]
    for task, pool in RULE_POOL.items():
        lines.append(f"@task {task} generic")
        for index in rng.choice(len(pool), size=rng.integers(2, 4), replace=False):
            rule = pool[index]
            weights = UNIT_WEIGHTS if rule in UNIT_RULES else IMPLICATION_WEIGHTS
            lines.append(f"{rng.choice(weights):g}: {rule}")
        lines.append(HARD_RULES[task])
        lines.append("@end")
    people = ["A", "B", "C"]
    evidence = [f"stress({p})" for p in people if rng.random() < 0.5]
    evidence += [
        f"friends({p}, {q})"
        for p in people
        for q in people
        if p != q and rng.random() < 0.4
    ]
    program = parse_program("\n".join(lines) + "\n")
    return parse_evidence("\n".join(evidence) + "\n", program)


@pytest.mark.slow
def test_random_programs_against_the_optimum():
    """Exact tasks bound the optimum from below and mostly reach it."""
    close = 0
    for seed in range(50):
        program = random_two_task_program(seed)
        db = ground(program)
        _, optimum = brute_force_map(db)
        config = MasterConfig(max_iterations=100)
        result = run_map(program, db, assign_tasks(program), config)
        assert result.feasible
        assert result.cost >= optimum - 1e-9
        assert all(r.dual <= optimum + 1e-9 for r in result.stats.records)
        if result.stats.certified:
            assert result.cost == pytest.approx(optimum)
        close += result.cost <= 1.05 * optimum + 1e-9
    assert close >= 45


@pytest.mark.slow
@pytest.mark.parametrize("name", REGRESSION_PROGRAMS)
@pytest.mark.parametrize("mode", constants.MODES)
def test_multipliers_sum_to_zero(load_bundled, name, mode):
    """The multipliers of every shared atom cancel after each run."""
    program = load_bundled(name)
    db = ground(program)
    master = Master(
        program, db, assign_tasks(program), mode, MasterConfig(max_iterations=10)
    )
    master.run()
    assert master.store.sum_residual(master.registry) <= 1e-12
