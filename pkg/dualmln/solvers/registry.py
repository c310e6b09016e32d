"""Solver lookup by task kind."""

from __future__ import annotations

from compiler.types import TaskKind

from .base import TaskSolver
from .chain import ChainSolver
from .classification import ClassificationSolver
from .coref import CorefSolver
from .generic import GenericSolver

SOLVERS: dict[TaskKind, type[TaskSolver]] = {
    TaskKind.COREF: CorefSolver,
    TaskKind.SIMPLE: ClassificationSolver,
    TaskKind.CORRELATED: ChainSolver,
    TaskKind.GENERIC: GenericSolver,
}


def solver_for(kind: TaskKind) -> TaskSolver:
    return SOLVERS[kind]()


def fallback_solver() -> TaskSolver:
    return GenericSolver()
