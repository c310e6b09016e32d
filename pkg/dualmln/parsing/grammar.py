"""
pyparsing grammar for program (``.mln``) and evidence (``.db``) files.

Program lines::

    *affil(per, org)                      // query relation
    coOccurs(per, org)                    // evidence relation
    dom org = {MIT, "IBM San Jose"}       // optional closed domain
    @task coref coref                     // pin following rules to a task
    6: pSimHard(p1, p2) => pCoref(p1, p2)
    inf: pCoref(x, y), pCoref(y, z) => pCoref(x, z)
    5: Happy(p) <=> !Sad(p)
    @end

Evidence lines::

    coOccurs("Jeff Ullman", Stanford)
    !homepage(Joe, Doc202)
"""

from __future__ import annotations

import logging
import math

import pyparsing as pp

from compiler.types import TaskKind
from core.types import EvidenceError, MLNSyntaxError, SchemaError
from logic.types import Clause, Constant, Equality, Literal, PredicateSchema, Variable

from .program import EvidenceAtom, MLNProgram, TaskHint

logger = logging.getLogger(__name__)

LPAR, RPAR, COLON = map(pp.Suppress, "():")
IDENT = pp.Regex(r"[A-Za-z_][A-Za-z0-9_]*")
QUOTED = pp.QuotedString('"', esc_char="\\")
BARE_CONSTANT = pp.Regex(r"[A-Z][A-Za-z0-9_]*|[0-9]+(?:\.[0-9]+)?")
RAW_CONSTANT = QUOTED | BARE_CONSTANT
VARIABLE = pp.Regex(r"[a-z][A-Za-z0-9_]*").set_parse_action(lambda t: Variable(t[0]))
CONSTANT = RAW_CONSTANT.copy().set_parse_action(lambda t: Constant(t[0]))
TERM = VARIABLE | CONSTANT

EQ_OP = pp.Literal("!=") | pp.Regex(r"=(?!>)")
COMPARISON = (TERM("left") + EQ_OP("op") + TERM("right")).set_parse_action(
    lambda t: Equality(t.op == "=", t.left, t.right)
)
ATOM = (
    pp.Opt(pp.Literal("!"))("neg")
    + IDENT("name")
    + LPAR
    + pp.Group(pp.DelimitedList(TERM))("args")
    + RPAR
).set_parse_action(lambda t: Literal(not t.neg, t.name, tuple(t.args)))
LITERAL = COMPARISON | ATOM

CONJUNCTION = pp.Group(pp.DelimitedList(LITERAL))
DISJUNCTION = pp.Group(LITERAL + pp.ZeroOrMore(pp.Suppress(pp.Keyword("v")) + LITERAL))
IMPLICATION = pp.Group(CONJUNCTION("body") + pp.Suppress("=>") + DISJUNCTION("head"))
BICONDITIONAL = pp.Group(LITERAL("lhs") + pp.Suppress("<=>") + LITERAL("rhs"))
FORMULA = IMPLICATION("implies") | BICONDITIONAL("iff") | DISJUNCTION("clause")

WEIGHT = pp.Regex(r"[+-]?(?:inf\b|(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)")
RULE = pp.Group(WEIGHT("weight") + COLON + FORMULA)("rule")
SCHEMA = pp.Group(
    pp.Opt(pp.Literal("*"))("star")
    + IDENT("name")
    + LPAR
    + pp.Group(pp.DelimitedList(IDENT))("domains")
    + RPAR
)("schema")
DOMAIN = pp.Group(
    pp.Suppress(pp.Keyword("dom"))
    + IDENT("domain")
    + pp.Suppress("=")
    + pp.Suppress("{")
    + pp.Group(pp.Opt(pp.DelimitedList(RAW_CONSTANT)))("values")
    + pp.Suppress("}")
)("domain_decl")
DIRECTIVE = pp.Group(
    pp.Suppress(pp.Literal("@task")) + IDENT("task") + pp.Opt(IDENT)("kind")
)("task") | pp.Group(pp.Literal("@end"))("end")

STATEMENT = pp.Opt(RULE | DIRECTIVE | DOMAIN | SCHEMA) + pp.StringEnd()
STATEMENT.ignore(pp.dbl_slash_comment)

EVIDENCE_CONSTANT = QUOTED | pp.Regex(r"[A-Za-z0-9_][A-Za-z0-9_.\-]*")
EVIDENCE = pp.Opt(
    pp.Opt(pp.Literal("!"))("neg")
    + IDENT("name")
    + LPAR
    + pp.Group(pp.DelimitedList(EVIDENCE_CONSTANT))("args")
    + RPAR
) + pp.StringEnd()
EVIDENCE.ignore(pp.dbl_slash_comment)


def _parse_line(grammar: pp.ParserElement, line: str, number: int) -> pp.ParseResults:
    try:
        return grammar.parse_string(line, parse_all=True)
    except pp.ParseException as exc:
        raise MLNSyntaxError(exc.msg, line=number, column=exc.col) from exc


def _weight(token: str, number: int) -> float:
    value = float(token)
    if value == -math.inf:
        raise MLNSyntaxError("negative hard weights are not supported", number, 1)
    return value


def _clause_bodies(
    parsed: pp.ParseResults, number: int
) -> list[list[Literal | Equality]]:
    """Translate a parsed formula into one or two disjunctions."""
    if "implies" in parsed:
        formula = parsed["implies"]
        body = [lit.negate() for lit in formula["body"]]
        return [body + list(formula["head"])]
    if "iff" in parsed:
        formula = parsed["iff"]
        lhs, rhs = formula["lhs"], formula["rhs"]
        if isinstance(lhs, Equality) or isinstance(rhs, Equality):
            raise MLNSyntaxError("'<=>' needs a predicate on both sides", number, 1)
        return [[lhs.negate(), rhs], [lhs, rhs.negate()]]
    return [list(parsed["clause"])]


def parse_program(text: str) -> MLNProgram:
    """
    Parse schema declarations, domain declarations, task directives and rules.

    Args:
        text: Program source.

    Returns:
        MLNProgram: The program without evidence.

    Raises:
        MLNSyntaxError: Malformed line, with line and column.
        SchemaError: Duplicate schema, undeclared predicate or arity mismatch.
    """
    schemas: dict[str, PredicateSchema] = {}
    domains: dict[str, tuple[str, ...]] = {}
    hints: dict[str, TaskHint] = {}
    pending: list[tuple[int, float, list[Literal | Equality], str | None]] = []
    current: str | None = None

    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parsed = _parse_line(STATEMENT, line, number)
        if not parsed:
            continue
        statement = parsed[0]
        name = statement.get_name()
        if name == "schema":
            if statement["name"] in schemas:
                raise SchemaError(
                    f"line {number}: duplicate schema for {statement['name']}"
                )
            schemas[statement["name"]] = PredicateSchema(
                statement["name"],
                tuple(statement["domains"]),
                query=bool(statement.get("star")),
            )
        elif name == "domain_decl":
            values = domains.get(statement["domain"], ())
            domains[statement["domain"]] = tuple(
                dict.fromkeys([*values, *statement["values"]])
            )
        elif name == "task":
            kind = statement.get("kind") or TaskKind.GENERIC.value
            try:
                kind = TaskKind.parse(kind).value
            except ValueError as exc:
                raise MLNSyntaxError(str(exc), number, 1) from exc
            name = statement["task"]
            known = hints.setdefault(name, TaskHint(name, kind))
            if known.kind != kind:
                raise MLNSyntaxError(
                    f"task {known.name} was declared as {known.kind}", number, 1
                )
            current = known.name
        elif name == "end":
            current = None
        else:
            weight = _weight(statement["weight"], number)
            for disjuncts in _clause_bodies(statement, number):
                pending.append((number, weight, disjuncts, current))

    rules = []
    for number, weight, disjuncts, task in pending:
        literals = tuple(d for d in disjuncts if isinstance(d, Literal))
        equalities = tuple(d for d in disjuncts if isinstance(d, Equality))
        for lit in literals:
            schema = schemas.get(lit.predicate)
            if schema is None:
                raise SchemaError(
                    f"line {number}: undeclared predicate {lit.predicate}"
                )
            if len(lit.args) != schema.arity:
                raise SchemaError(
                    f"line {number}: {lit.predicate} expects {schema.arity} "
                    f"argument(s), got {len(lit.args)}"
                )
        try:
            rules.append(Clause(weight, literals, equalities, len(rules), task))
        except ValueError as exc:
            raise MLNSyntaxError(str(exc), number, 1) from exc

    program = MLNProgram(
        schemas=tuple(schemas.values()),
        rules=tuple(rules),
        domains=domains,
        task_hints=tuple(hints.values()),
    )
    logger.debug(
        "Parsed %d schema(s) and %d rule(s)", len(program.schemas), len(program.rules)
    )
    return program


def parse_evidence(text: str, program: MLNProgram) -> MLNProgram:
    """
    Parse one ground evidence atom per line and attach it to ``program``.

    A leading ``!`` marks explicit negative evidence; every unlisted tuple of
    an evidence predicate is false anyway.

    Raises:
        MLNSyntaxError: Malformed line.
        QueryEvidenceError: Evidence for a query predicate.
        EvidenceError: Undeclared predicate, arity mismatch, or the same
            tuple listed as both true and false.
    """
    atoms: dict[tuple[str, tuple[str, ...]], EvidenceAtom] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parsed = _parse_line(EVIDENCE, line, number)
        if not parsed:
            continue
        atom = EvidenceAtom(
            parsed["name"], tuple(parsed["args"]), not parsed.get("neg")
        )
        try:
            program.with_evidence([atom])
        except EvidenceError as exc:
            raise type(exc)(f"line {number}: {exc}") from exc
        previous = atoms.setdefault((atom.predicate, atom.args), atom)
        if previous.truth != atom.truth:
            raise EvidenceError(
                f"line {number}: {atom.predicate}{atom.args} is both true and false"
            )
    return program.with_evidence(atoms.values())
