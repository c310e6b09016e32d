"""Canonical printer for programs and evidence; its output parses back unchanged."""

from __future__ import annotations

import re

from logic.types import Clause, Constant, Equality, Literal, Term, format_weight

from .program import EvidenceAtom, MLNProgram

_BARE = re.compile(r"[A-Z][A-Za-z0-9_]*|[0-9]+(?:\.[0-9]+)?")


def format_constant(value: str) -> str:
    if _BARE.fullmatch(value):
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def format_term(term: Term) -> str:
    if isinstance(term, Constant):
        return format_constant(term.value)
    return term.name


def format_literal(lit: Literal | Equality) -> str:
    if isinstance(lit, Equality):
        op = "=" if lit.positive else "!="
        return f"{format_term(lit.left)} {op} {format_term(lit.right)}"
    args = ", ".join(format_term(t) for t in lit.args)
    return f"{'' if lit.positive else '!'}{lit.predicate}({args})"


def format_clause(clause: Clause) -> str:
    disjuncts = [*clause.literals, *clause.equalities]
    body = " v ".join(map(format_literal, disjuncts))
    return f"{format_weight(clause.weight)}: {body}"


def format_evidence(atom: EvidenceAtom) -> str:
    args = ", ".join(format_constant(a) for a in atom.args)
    return f"{'' if atom.truth else '!'}{atom.predicate}({args})"


def print_program(program: MLNProgram) -> str:
    """
    Render ``program`` in the program grammar.

    Domains come first, then schemas, then rules in index order with
    ``@task``/``@end`` wrapped around pinned runs. Biconditionals are printed
    as the two clauses they expanded to.
    """
    lines = [
        f"dom {name} = {{{', '.join(format_constant(v) for v in values)}}}"
        for name, values in program.domains.items()
    ]
    lines += [
        f"{'*' if s.query else ''}{s.name}({', '.join(s.domains)})"
        for s in program.schemas
    ]
    kinds = {hint.name: hint.kind for hint in program.task_hints}
    current: str | None = None
    for rule in program.rules:
        if rule.task != current:
            if current is not None:
                lines.append("@end")
            if rule.task is not None:
                lines.append(f"@task {rule.task} {kinds[rule.task]}")
            current = rule.task
        lines.append(format_clause(rule))
    if current is not None:
        lines.append("@end")
    return "\n".join(lines) + "\n" if lines else ""


def print_evidence(program: MLNProgram) -> str:
    return "".join(format_evidence(atom) + "\n" for atom in program.evidence)
