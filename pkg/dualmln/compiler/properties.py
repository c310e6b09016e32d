"""
Sound (not complete) syntactic detection of relation properties.

REF, SYM, TRN and KEY are read off hard rules only. NoREC and TrREC look at a
rule set, normally the rules the greedy planner has not consumed yet. All
patterns work on clause form, so literal order and variable names do not
matter.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence

import networkx as nx

from logic.types import Clause, Literal, Variable
from parsing.program import MLNProgram

from .types import ChainSpec, Property

logger = logging.getLogger(__name__)


def _all_variables(lit: Literal) -> bool:
    return all(isinstance(t, Variable) for t in lit.args)


def is_ref(clause: Clause, relation: str) -> bool:
    """``p(x, x)`` or ``x = y => p(x, y)`` (clause form ``x != y v p(x, y)``)."""
    if len(clause.literals) != 1:
        return False
    lit = clause.literals[0]
    if not lit.positive or lit.predicate != relation or len(lit.args) != 2:
        return False
    if not _all_variables(lit):
        return False
    a, b = lit.args
    if not clause.equalities:
        return a == b
    if len(clause.equalities) != 1 or a == b:
        return False
    eq = clause.equalities[0]
    return not eq.positive and {eq.left, eq.right} == {a, b}


def is_sym(clause: Clause, relation: str) -> bool:
    """``p(a, b) => p(b, a)``."""
    if len(clause.literals) != 2 or clause.equalities:
        return False
    neg = [lit for lit in clause.literals if not lit.positive]
    pos = [lit for lit in clause.literals if lit.positive]
    if len(neg) != 1 or len(pos) != 1:
        return False
    body, head = neg[0], pos[0]
    if body.predicate != relation or head.predicate != relation or len(body.args) != 2:
        return False
    if not (_all_variables(body) and _all_variables(head)):
        return False
    a, b = body.args
    return a != b and head.args == (b, a)


def is_trn(clause: Clause, relation: str) -> bool:
    """``p(a, b), p(b, c) => p(a, c)``."""
    if len(clause.literals) != 3 or clause.equalities:
        return False
    if any(lit.predicate != relation or len(lit.args) != 2 for lit in clause.literals):
        return False
    if not all(_all_variables(lit) for lit in clause.literals):
        return False
    neg = [lit for lit in clause.literals if not lit.positive]
    pos = [lit for lit in clause.literals if lit.positive]
    if len(neg) != 2 or len(pos) != 1:
        return False
    a, c = pos[0].args
    if a == c:
        return False
    for first, second in (neg, neg[::-1]):
        joined = first.args[1] == second.args[0]
        if joined and first.args[0] == a and second.args[1] == c:
            b = first.args[1]
            return b not in (a, c)
    return False


def key_of_clause(clause: Clause, relation: str) -> tuple[int, ...] | None:
    """
    Key positions asserted by a functional-dependency clause, if it is one.

    The shape is ``p(k, y1..), p(k, z1..) => y1 = z1 v ...``: two negative
    ``p`` literals over variables agreeing on the key positions, and one
    positive equality per remaining position.
    """
    if len(clause.literals) != 2 or not clause.equalities:
        return None
    first, second = clause.literals
    if any(lit.positive or lit.predicate != relation for lit in clause.literals):
        return None
    if not (_all_variables(first) and _all_variables(second)):
        return None
    key = tuple(i for i, (a, b) in enumerate(zip(first.args, second.args)) if a == b)
    rest = [i for i in range(len(first.args)) if i not in key]
    if not rest or len(set(first.args)) != len(first.args):
        return None
    wanted = {frozenset((first.args[i], second.args[i])) for i in rest}
    given = {
        frozenset((eq.left, eq.right)) for eq in clause.equalities if eq.positive
    }
    if len(given) != len(clause.equalities) or given != wanted:
        return None
    return key


def chain_of_clause(
    program: MLNProgram, clause: Clause, relation: str
) -> ChainSpec | None:
    """
    Match ``p(.., y, ..), T(y, z) => p(.., z, ..)`` in any sign combination.

    Both ``p`` literals must be identical except at one position ``j``, and the
    clause must contain exactly one other literal: a negated evidence ``T``
    linking the two values at ``j``.
    """
    if len(clause.literals) != 3 or clause.equalities:
        return None
    own = [lit for lit in clause.literals if lit.predicate == relation]
    other = [lit for lit in clause.literals if lit.predicate != relation]
    if len(own) != 2 or len(other) != 1:
        return None
    link = other[0]
    if link.positive or program.is_query(link.predicate) or len(link.args) != 2:
        return None
    if not _all_variables(link) or link.args[0] == link.args[1]:
        return None
    first, second = own
    differ = [i for i, (a, b) in enumerate(zip(first.args, second.args)) if a != b]
    if len(differ) != 1:
        return None
    j = differ[0]
    if {first.args[j], second.args[j]} != set(link.args):
        return None
    if not all(isinstance(lit.args[j], Variable) for lit in (first, second)):
        return None
    return ChainSpec(position=j, link=link.predicate)


def _rules(program: MLNProgram, rules: Iterable[int] | None) -> list[Clause]:
    if rules is None:
        return list(program.rules)
    return [program.rules[i] for i in rules]


def find_key(program: MLNProgram, relation: str) -> tuple[int, ...] | None:
    """Smallest key asserted by a hard rule, or None if the relation is Boolean."""
    keys = [
        key
        for clause in program.rules
        if clause.hard
        for key in [key_of_clause(clause, relation)]
        if key is not None
    ]
    return min(keys, key=lambda k: (len(k), k)) if keys else None


def dependency_graph(program: MLNProgram, rules: Sequence[Clause]) -> nx.DiGraph:
    """Edge ``Q -> R`` when ``R`` is positive in a rule mentioning query ``Q``."""
    graph = nx.DiGraph()
    graph.add_nodes_from(program.query_relations())
    for clause in rules:
        queries = [lit for lit in clause.literals if program.is_query(lit.predicate)]
        for head in queries:
            if not head.positive:
                continue
            for lit in queries:
                if lit is not head:
                    graph.add_edge(lit.predicate, head.predicate)
    return graph


def _on_cycle(graph: nx.DiGraph, relation: str) -> bool:
    if graph.has_edge(relation, relation):
        return True
    for component in nx.strongly_connected_components(graph):
        if relation in component:
            return len(component) > 1
    return False


def _link_is_chain(program: MLNProgram, link: str) -> bool:
    """First column of ``link`` is a key in the evidence and the links form a DAG."""
    rows = [
        atom.args
        for atom in program.evidence
        if atom.truth and atom.predicate == link
    ]
    heads = [row[0] for row in rows]
    if len(set(heads)) != len(heads):
        return False
    graph = nx.DiGraph()
    graph.add_edges_from(rows)
    return nx.is_directed_acyclic_graph(graph)


def find_chain(
    program: MLNProgram, relation: str, rules: Iterable[int] | None = None
) -> ChainSpec | None:
    """
    The chain structure of ``relation`` if every recursive rule in ``rules``
    is either a key rule or a chain rule over a single position and link.
    """
    clauses = _rules(program, rules)
    flat = [c for c in clauses if len(c.occurrences(relation)) < 2]
    if _on_cycle(dependency_graph(program, flat), relation):
        return None
    spec: ChainSpec | None = None
    for clause in clauses:
        if len(clause.occurrences(relation)) < 2:
            continue
        if clause.hard and key_of_clause(clause, relation) is not None:
            continue
        found = chain_of_clause(program, clause, relation)
        if found is None or (spec is not None and found != spec):
            return None
        spec = found
    if spec is None:
        return None
    key = find_key(program, relation)
    if key is not None and spec.position not in key:
        return None
    if not _link_is_chain(program, spec.link):
        return None
    return spec


def detect_properties(
    program: MLNProgram, relation: str, rules: Iterable[int] | None = None
) -> frozenset[Property]:
    """
    Properties of ``relation`` that the rules guarantee.

    Args:
        program: Parsed program (evidence is needed for TrREC).
        relation: Query relation name.
        rules: Rule indices for NoREC/TrREC; defaults to every rule.

    Returns:
        frozenset[Property]: REF, SYM, TRN and KEY from hard rules; NoREC if
        the relation occurs at most once per rule and is not on a
        dependency cycle; TrREC if its only recursion is a chain.
    """
    found: set[Property] = set()
    for clause in program.rules:
        if not clause.hard:
            continue
        if is_ref(clause, relation):
            found.add(Property.REF)
        if is_sym(clause, relation):
            found.add(Property.SYM)
        if is_trn(clause, relation):
            found.add(Property.TRN)
        if key_of_clause(clause, relation) is not None:
            found.add(Property.KEY)

    clauses = _rules(program, rules)
    once = all(len(clause.occurrences(relation)) <= 1 for clause in clauses)
    if once and not _on_cycle(dependency_graph(program, clauses), relation):
        found.add(Property.NOREC)
    elif find_chain(program, relation, rules) is not None:
        found.add(Property.TRREC)
    logger.debug("Properties of %s: %s", relation, sorted(p.value for p in found))
    return frozenset(found)
