"""
Shared error types for the dualmln engine.

Every app raises one of these so the management commands can map failures
onto stable exit codes.
"""

from __future__ import annotations


class DualMLNError(Exception):
    """Base class for every error raised by the engine."""


class InputError(DualMLNError):
    """Error caused by the user's program, evidence or configuration."""


class MLNSyntaxError(InputError):
    """Syntax error in a program or evidence file."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SchemaError(InputError):
    """Duplicate, undeclared or malformed predicate schema."""


class EvidenceError(InputError):
    """Evidence atom that does not fit the declared schema."""


class QueryEvidenceError(EvidenceError):
    """Evidence was supplied for a query predicate."""


class GroundingError(InputError):
    """Rule cannot be instantiated (arity, domain or typing problem)."""


class InstanceTooLargeError(DualMLNError):
    """Exhaustive oracle asked to enumerate too many worlds."""


class PlanError(DualMLNError):
    """Malformed view, plan or binding handed to the relational engine."""


class SolverError(DualMLNError):
    """Solver received inconsistent input."""


class UnsupportedStructureError(SolverError):
    """Ground structure is outside what a specialized solver handles."""


class InfeasibleTaskError(DualMLNError):
    """Hard rules of a task (or of the whole program) cannot be satisfied."""


class MissingCopyError(DualMLNError):
    """A participating task did not report its copy of a shared atom."""
