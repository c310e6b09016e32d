"""
Grounding: instantiate every rule over the active domains.

Evidence is closed-world. A substitution only produces a ground clause when
no evidence literal or equality disjunct already satisfies it, so the
substitutions worth enumerating are exactly the answers of a join over the
rule's negated evidence literals (plus domain relations for the remaining
variables). That join runs on the relational engine.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from typing import TYPE_CHECKING

from core.types import GroundingError
from relational.relation import Catalog, Relation
from relational.views import AdornedView, Condition, Subgoal, eval_eager

from .types import (
    AtomKey,
    Clause,
    Constant,
    GroundAtom,
    GroundDatabase,
    GroundLiteral,
    Variable,
    make_ground_clause,
)

if TYPE_CHECKING:
    from parsing.program import MLNProgram

logger = logging.getLogger(__name__)

DOMAIN_PREFIX = "dom:"


def variable_domains(program: MLNProgram, clause: Clause) -> dict[Variable, str]:
    """
    Infer the domain of every variable from the argument positions it fills.

    Raises:
        GroundingError: Unknown predicate, arity mismatch, or a variable used
            in positions of two different domains.
    """
    domains: dict[Variable, str] = {}
    for lit in clause.literals:
        if not program.has_predicate(lit.predicate):
            raise GroundingError(f"Unknown predicate: {lit.predicate}")
        schema = program.schema(lit.predicate)
        if len(lit.args) != schema.arity:
            raise GroundingError(
                f"{lit.predicate} expects {schema.arity} argument(s), "
                f"got {len(lit.args)} in rule {clause.index}"
            )
        for domain, term in zip(schema.domains, lit.args):
            if isinstance(term, Variable):
                known = domains.setdefault(term, domain)
                if known != domain:
                    raise GroundingError(
                        f"Variable {term} of rule {clause.index} is used with "
                        f"domains {known} and {domain}"
                    )
    return domains


def grounding_view(
    program: MLNProgram, clause: Clause, name: str | None = None
) -> AdornedView:
    """
    The all-free view whose answers are the substitutions of ``clause`` that
    evidence and equality constraints do not already satisfy.
    """
    domains = variable_domains(program, clause)
    head = tuple(clause.variables())
    body: list[Subgoal] = []
    covered: set[Variable] = set()
    for lit in clause.literals:
        if not lit.positive and not program.is_query(lit.predicate):
            body.append(Subgoal(lit.predicate, lit.args))
            covered.update(lit.variables())
    for var in head:
        if var not in covered:
            body.append(Subgoal(DOMAIN_PREFIX + domains[var], (var,)))
    conditions = tuple(
        Condition(not eq.positive, eq.left, eq.right) for eq in clause.equalities
    )
    return AdornedView(
        name or f"ground_r{clause.index}",
        head,
        "f" * len(head),
        tuple(body),
        conditions,
    )


def check_domains(program: MLNProgram) -> None:
    """
    Reject constants outside an explicitly declared domain.

    Raises:
        GroundingError: Evidence or a rule names an undeclared constant.
    """
    declared = {name: set(values) for name, values in program.domains.items()}
    if not declared:
        return

    def check(predicate: str, args: Iterable[object]) -> None:
        for domain, arg in zip(program.schema(predicate).domains, args):
            value = arg.value if isinstance(arg, Constant) else arg
            if isinstance(arg, Variable) or domain not in declared:
                continue
            if value not in declared[domain]:
                raise GroundingError(
                    f"Constant {value} of {predicate} is not in domain {domain}"
                )

    for atom in program.evidence:
        check(atom.predicate, atom.args)
    for rule in program.rules:
        for lit in rule.literals:
            if program.has_predicate(lit.predicate):
                check(lit.predicate, lit.args)


def evidence_catalog(
    program: MLNProgram, domains: Mapping[str, list[str]] | None = None
) -> Catalog:
    """Relations for every evidence predicate plus one unary relation per domain."""
    domains = domains if domains is not None else program.active_domains()
    catalog = Catalog()
    for schema in program.schemas:
        if not schema.query:
            catalog.register(Relation(schema.name, schema.arity))
    for atom in program.evidence:
        if atom.truth:
            catalog[atom.predicate].add(atom.args)
    for name, values in domains.items():
        catalog.register(Relation(DOMAIN_PREFIX + name, 1, ((v,) for v in values)))
    return catalog


class ClauseSink:
    """Collects simplified ground clauses and the constant offset."""

    def __init__(self) -> None:
        self.pending: list[tuple[float, list[tuple[AtomKey, bool]], int]] = []
        self.offset = 0.0

    def add_constant(self, weight: float, count: int = 1) -> None:
        if count and weight:
            self.offset += math.inf if math.isinf(weight) else abs(weight) * count

    def emit(
        self, clause: Clause, literals: list[tuple[AtomKey, bool]]
    ) -> None:
        """Record one substitution that evidence did not satisfy."""
        keys = {key: positive for key, positive in literals}
        tautology = len(keys) < len(literals) and any(
            keys[key] != positive for key, positive in literals
        )
        if tautology:
            if clause.weight < 0:
                self.add_constant(clause.weight)
            return
        if not literals:
            if clause.weight > 0:
                self.add_constant(clause.weight)
            return
        self.pending.append((clause.weight, literals, clause.index))

    def build(
        self, order: Mapping[str, int], evidence: frozenset[AtomKey]
    ) -> GroundDatabase:
        keys = sorted(
            {key for _, literals, _ in self.pending for key, _ in literals},
            key=lambda key: (order[key[0]], key[1]),
        )
        ids = {key: position for position, key in enumerate(keys)}
        atoms = tuple(GroundAtom(ids[key], key[0], key[1]) for key in keys)
        clauses = []
        for weight, literals, rule in self.pending:
            ground_literals: list[GroundLiteral] = [
                (ids[key], positive) for key, positive in literals
            ]
            clause = make_ground_clause(weight, ground_literals, rule)
            if clause is not None:
                clauses.append(clause)
        return GroundDatabase(atoms, tuple(clauses), evidence, self.offset)


def substitute(
    program: MLNProgram,
    clause: Clause,
    binding: Mapping[Variable, str],
    evidence: frozenset[AtomKey],
) -> list[tuple[AtomKey, bool]] | None:
    """
    Instantiate the clause's literals, dropping false evidence literals.

    Returns:
        The remaining query literals, or None if evidence or an equality
        disjunct satisfies the instance.
    """
    for eq in clause.equalities:
        left = eq.left.value if isinstance(eq.left, Constant) else binding[eq.left]
        right = eq.right.value if isinstance(eq.right, Constant) else binding[eq.right]
        if (left == right) == eq.positive:
            return None
    remaining: list[tuple[AtomKey, bool]] = []
    for lit in clause.literals:
        args = tuple(
            t.value if isinstance(t, Constant) else binding[t] for t in lit.args
        )
        if program.is_query(lit.predicate):
            remaining.append(((lit.predicate, args), lit.positive))
        elif ((lit.predicate, args) in evidence) == lit.positive:
            return None
    return remaining


def substitution_count(
    program: MLNProgram, clause: Clause, domains: Mapping[str, list[str]]
) -> int:
    count = 1
    for domain in variable_domains(program, clause).values():
        count *= len(domains.get(domain, ()))
    return count


def ground(program: MLNProgram) -> GroundDatabase:
    """
    Ground ``program`` with evidence elimination.

    Args:
        program: Parsed program with evidence.

    Returns:
        GroundDatabase: Query atoms occurring in surviving clauses (ids in
        predicate declaration order, then lexicographic constants), the
        simplified clauses, and the constant offset of eliminated clauses.

    Raises:
        GroundingError: Unknown predicate, arity mismatch or a constant
            outside its declared domain.
    """
    check_domains(program)
    domains = program.active_domains()
    catalog = evidence_catalog(program, domains)
    evidence = program.true_evidence()
    sink = ClauseSink()
    for clause in program.rules:
        view = grounding_view(program, clause)
        survivors = 0
        for row in eval_eager(view, catalog):
            binding = dict(zip(view.head, row))
            literals = substitute(program, clause, binding, evidence)
            if literals is None:
                continue
            survivors += 1
            sink.emit(clause, literals)
        if clause.weight < 0:
            satisfied = substitution_count(program, clause, domains) - survivors
            sink.add_constant(clause.weight, satisfied)
    db = sink.build(program.predicate_order(), evidence)
    logger.info(
        "Grounded %d rule(s) into %d clause(s) over %d atom(s)",
        len(program.rules),
        len(db.clauses),
        db.num_atoms,
    )
    return db
