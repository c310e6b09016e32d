"""The parsed program: schema, rules, evidence and declared constants."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field, replace

from core.types import EvidenceError, QueryEvidenceError, SchemaError
from logic.types import AtomKey, Clause, Constant, PredicateSchema


@dataclass(frozen=True, slots=True)
class EvidenceAtom:
    predicate: str
    args: tuple[str, ...]
    truth: bool = True


@dataclass(frozen=True, slots=True)
class TaskHint:
    """User-declared task from an ``@task name [kind]`` directive."""

    name: str
    kind: str


@dataclass(frozen=True)
class MLNProgram:
    """
    Parsed source of truth for one inference run.

    Rule indices are positions in ``rules`` and stay stable for reports.
    """

    schemas: tuple[PredicateSchema, ...] = ()
    rules: tuple[Clause, ...] = ()
    evidence: tuple[EvidenceAtom, ...] = ()
    domains: dict[str, tuple[str, ...]] = field(default_factory=dict)
    task_hints: tuple[TaskHint, ...] = ()

    def schema(self, name: str) -> PredicateSchema:
        for schema in self.schemas:
            if schema.name == name:
                return schema
        raise SchemaError(f"Undeclared predicate: {name}")

    def has_predicate(self, name: str) -> bool:
        return any(schema.name == name for schema in self.schemas)

    def predicate_order(self) -> dict[str, int]:
        return {schema.name: position for position, schema in enumerate(self.schemas)}

    def query_relations(self) -> list[str]:
        return [schema.name for schema in self.schemas if schema.query]

    def is_query(self, name: str) -> bool:
        return self.schema(name).query

    def true_evidence(self) -> frozenset[AtomKey]:
        return frozenset(
            (atom.predicate, atom.args) for atom in self.evidence if atom.truth
        )

    def with_evidence(self, evidence: Iterable[EvidenceAtom]) -> MLNProgram:
        """
        Return a copy carrying validated evidence.

        Raises:
            QueryEvidenceError: Evidence given for a query predicate.
            EvidenceError: Undeclared predicate or arity mismatch.
        """
        checked = []
        for atom in evidence:
            if not self.has_predicate(atom.predicate):
                raise EvidenceError(f"Undeclared predicate: {atom.predicate}")
            schema = self.schema(atom.predicate)
            if schema.query:
                raise QueryEvidenceError(
                    f"Evidence is not accepted for query predicate {schema.name}"
                )
            if len(atom.args) != schema.arity:
                raise EvidenceError(
                    f"{schema.name} expects {schema.arity} argument(s), "
                    f"got {len(atom.args)}"
                )
            checked.append(atom)
        return replace(self, evidence=self.evidence + tuple(checked))

    def active_domains(self) -> dict[str, list[str]]:
        """
        Constants per domain: declared constants plus those seen in evidence
        and rules, sorted lexicographically.
        """
        values: dict[str, set[str]] = {
            name: set(constants) for name, constants in self.domains.items()
        }
        for schema in self.schemas:
            for domain in schema.domains:
                values.setdefault(domain, set())
        for atom in self.evidence:
            for domain, arg in zip(self.schema(atom.predicate).domains, atom.args):
                values[domain].add(arg)
        for rule in self.rules:
            for lit in rule.literals:
                for domain, arg in zip(self.schema(lit.predicate).domains, lit.args):
                    if isinstance(arg, Constant):
                        values[domain].add(arg.value)
        return {name: sorted(constants) for name, constants in values.items()}
