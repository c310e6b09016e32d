"""
Greedy decomposition of a program into tasks.

The planner walks the task kinds in preference order (Coref, Simple
Classification, Correlated Classification). The first query relation whose
properties over the still unconsumed rules satisfy a kind gets a task with
the soft rules predicting it, plus a replica of every hard rule mentioning
it. The walk restarts after each new task. Whatever soft rule is left ends up
in one Generic task.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence

import networkx as nx

from logic.types import Clause
from parsing.program import MLNProgram

from .properties import detect_properties, find_chain, find_key
from .types import PREFERENCE, LogicalPlan, Task, TaskKind

logger = logging.getLogger(__name__)

GENERIC_TASK = "generic"


def target_relation(program: MLNProgram, clause: Clause) -> str | None:
    """
    The query relation a rule predicts: its first positive query literal,
    else the first query relation it mentions.
    """
    queries = [lit for lit in clause.literals if program.is_query(lit.predicate)]
    for lit in queries:
        if lit.positive:
            return lit.predicate
    return queries[0].predicate if queries else None


def predicts(program: MLNProgram, clause: Clause, relation: str) -> bool:
    """True if ``relation`` occurs positively, or is the rule's fallback target."""
    if any(lit.positive and lit.predicate == relation for lit in clause.literals):
        return True
    return target_relation(program, clause) == relation


def query_relations_of(program: MLNProgram, rules: Iterable[int]) -> tuple[str, ...]:
    mentioned = {
        lit.predicate
        for i in rules
        for lit in program.rules[i].literals
        if program.is_query(lit.predicate)
    }
    return tuple(r for r in program.query_relations() if r in mentioned)


def hard_rules_for(
    program: MLNProgram, relations: Iterable[str], candidates: Iterable[int]
) -> list[int]:
    owned = set(relations)
    return [
        i
        for i in candidates
        if program.rules[i].hard and program.rules[i].predicates() & owned
    ]


def make_task(
    program: MLNProgram,
    name: str,
    kind: TaskKind,
    rules: Iterable[int],
    owned: Sequence[str],
    pinned: bool = False,
) -> Task:
    rules = tuple(sorted(set(rules)))
    relations = query_relations_of(program, rules)
    if kind is TaskKind.GENERIC:
        owned = relations
    key: tuple[int, ...] = ()
    chain = None
    if kind is not TaskKind.GENERIC and owned:
        arity = program.schema(owned[0]).arity
        key = find_key(program, owned[0]) or tuple(range(arity))
        if kind is TaskKind.CORRELATED:
            chain = find_chain(program, owned[0], rules)
    return Task(name, kind, rules, tuple(owned), relations, key, chain, pinned)


def _pinned_tasks(program: MLNProgram) -> list[Task]:
    """Tasks declared with ``@task`` directives."""
    tasks = []
    for hint in program.task_hints:
        rules = [r.index for r in program.rules if r.task == hint.name]
        if not rules:
            continue
        kind = TaskKind.parse(hint.kind)
        positives = Counter(
            lit.predicate
            for i in rules
            for lit in program.rules[i].literals
            if lit.positive and program.is_query(lit.predicate)
        )
        order = program.predicate_order()
        owned: tuple[str, ...] = ()
        if positives and kind is not TaskKind.GENERIC:
            owned = (min(positives, key=lambda r: (-positives[r], order[r])),)
        elif kind is not TaskKind.GENERIC:
            kind = TaskKind.GENERIC
        tasks.append(make_task(program, hint.name, kind, rules, owned, pinned=True))
    return tasks


def _greedy(
    program: MLNProgram, soft: set[int], hard: list[int], consumed: set[str]
) -> list[Task]:
    tasks: list[Task] = []
    while True:
        created = None
        for kind in PREFERENCE:
            for relation in program.query_relations():
                if relation in consumed:
                    continue
                targets = sorted(
                    i for i in soft if predicts(program, program.rules[i], relation)
                )
                if not targets:
                    continue
                properties = detect_properties(program, relation, sorted(soft) + hard)
                if kind.accepts(properties):
                    rules = targets + hard_rules_for(program, [relation], hard)
                    created = make_task(
                        program, f"{kind.value}:{relation}", kind, rules, [relation]
                    )
                    break
            if created is not None:
                break
        if created is None:
            return tasks
        logger.info(
            "Task %s takes rule(s) %s", created.name, ", ".join(map(str, created.rules))
        )
        tasks.append(created)
        consumed.add(created.relation)
        soft -= set(created.rules)


def schedule(tasks: Sequence[Task]) -> tuple[str, ...]:
    """
    Breadth-first order over the task/relation bipartite graph.

    Each unvisited task (in creation order) starts a traversal; neighbours
    are visited in creation/declaration order.
    """
    graph = nx.Graph()
    rank: dict[tuple[str, str], int] = {}
    for task in tasks:
        rank[("task", task.name)] = len(rank)
        graph.add_node(("task", task.name))
    for task in tasks:
        for relation in task.relations:
            node = ("relation", relation)
            rank.setdefault(node, len(rank))
            graph.add_edge(("task", task.name), node)
    def by_rank(nodes: Iterable[tuple[str, str]]) -> list[tuple[str, str]]:
        return sorted(nodes, key=rank.__getitem__)

    order: list[str] = []
    seen: set[str] = set()
    for task in tasks:
        if task.name in seen:
            continue
        source = ("task", task.name)
        edges = nx.bfs_edges(graph, source, sort_neighbors=by_rank)
        nodes = [source, *(v for _, v in edges)]
        for kind, name in nodes:
            if kind == "task" and name not in seen:
                seen.add(name)
                order.append(name)
    return tuple(order)


def assign_tasks(program: MLNProgram, monolithic: bool = False) -> LogicalPlan:
    """
    Compile ``program`` into a logical plan.

    Args:
        program: Parsed program; evidence is used for the TrREC data checks.
        monolithic: Put every rule into one Generic task.

    Returns:
        LogicalPlan: Tasks whose soft rules partition the program's soft
        rules, with hard rules replicated into every task owning a relation
        they mention.
    """
    everything = range(len(program.rules))
    if monolithic:
        tasks = (
            [make_task(program, GENERIC_TASK, TaskKind.GENERIC, everything, ())]
            if program.rules
            else []
        )
    else:
        tasks = _pinned_tasks(program)
        consumed = {
            r for task in tasks if task.kind is not TaskKind.GENERIC for r in task.owned
        }
        free = [r.index for r in program.rules if r.task is None]
        soft = {i for i in free if not program.rules[i].hard}
        hard = [i for i in free if program.rules[i].hard]
        tasks += _greedy(program, soft, hard, consumed)

        placed = {i for task in tasks for i in task.rules}
        leftover = sorted(soft - placed) + [i for i in hard if i not in placed]
        if leftover:
            relations = query_relations_of(program, leftover)
            rules = set(leftover) | set(hard_rules_for(program, relations, hard))
            tasks.append(make_task(program, GENERIC_TASK, TaskKind.GENERIC, rules, ()))

    properties = {
        r: detect_properties(program, r) for r in program.query_relations()
    }
    plan = LogicalPlan(
        tasks=tuple(tasks),
        relations=tuple(program.query_relations()),
        properties=properties,
        order=schedule(tasks),
    )
    logger.info(
        "Compiled %d rule(s) into %d task(s): %s",
        len(program.rules),
        len(plan.tasks),
        ", ".join(plan.order),
    )
    return plan
