"""Logical plan types: relation properties, task kinds, tasks and the plan."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum


class Property(str, Enum):
    REF = "REF"
    SYM = "SYM"
    TRN = "TRN"
    KEY = "KEY"
    NOREC = "NoREC"
    TRREC = "TrREC"


class TaskKind(str, Enum):
    """Solver families, in the compiler's preference order."""

    COREF = "coref"
    SIMPLE = "classification"
    CORRELATED = "correlated"
    GENERIC = "generic"

    @classmethod
    def parse(cls, value: str) -> TaskKind:
        aliases = {"simple": cls.SIMPLE, "chain": cls.CORRELATED}
        try:
            return aliases.get(value.lower()) or cls(value.lower())
        except ValueError:
            choices = ", ".join(kind.value for kind in cls)
            raise ValueError(
                f"Unknown task kind {value!r} (expected one of {choices})"
            ) from None

    @property
    def label(self) -> str:
        return {
            TaskKind.COREF: "Coref",
            TaskKind.SIMPLE: "SimpleClassification",
            TaskKind.CORRELATED: "CorrelatedClassification",
            TaskKind.GENERIC: "Generic",
        }[self]

    def accepts(self, properties: frozenset[Property]) -> bool:
        """
        Whether a relation with ``properties`` may be solved by this kind.

        A relation without a KEY rule is Boolean and counts as keyed by its
        whole tuple.
        """
        if self is TaskKind.COREF:
            return {Property.REF, Property.SYM, Property.TRN} <= properties
        if self is TaskKind.SIMPLE:
            return Property.NOREC in properties
        if self is TaskKind.CORRELATED:
            return Property.TRREC in properties
        return True


PREFERENCE: tuple[TaskKind, ...] = (
    TaskKind.COREF,
    TaskKind.SIMPLE,
    TaskKind.CORRELATED,
)


@dataclass(frozen=True)
class ChainSpec:
    """TrREC chain: argument ``position`` moves along the ``link`` relation."""

    position: int
    link: str


@dataclass(frozen=True)
class Task:
    """
    One subprogram of the decomposition.

    Attributes:
        name: Stable task name, used for seeds and reports.
        kind: Solver family.
        rules: Program rule indices, sorted.
        owned: Query relations the task decides; specialized kinds own one.
        relations: Every query relation mentioned by the task's rules.
        key: Key positions of the owned relation (all positions if Boolean).
        chain: Chain structure for correlated classification.
        pinned: True if the task came from an ``@task`` directive.
    """

    name: str
    kind: TaskKind
    rules: tuple[int, ...]
    owned: tuple[str, ...]
    relations: tuple[str, ...]
    key: tuple[int, ...] = ()
    chain: ChainSpec | None = None
    pinned: bool = False

    @property
    def relation(self) -> str:
        return self.owned[0]


@dataclass(frozen=True)
class LogicalPlan:
    """
    Bipartite graph between tasks and query relations, plus the schedule.

    Attributes:
        tasks: Tasks in creation order.
        relations: Query relations in declaration order.
        properties: Properties of each query relation over all rules.
        order: Task names in breadth-first schedule order.
    """

    tasks: tuple[Task, ...] = ()
    relations: tuple[str, ...] = ()
    properties: Mapping[str, frozenset[Property]] = field(default_factory=dict)
    order: tuple[str, ...] = ()

    def task(self, name: str) -> Task:
        for task in self.tasks:
            if task.name == name:
                return task
        raise KeyError(name)

    def scheduled(self) -> list[Task]:
        return [self.task(name) for name in self.order]

    def tasks_of(self, relation: str) -> list[Task]:
        """Tasks mentioning ``relation``, in schedule order."""
        return [task for task in self.scheduled() if relation in task.relations]

    def shared_relations(self) -> list[str]:
        return [r for r in self.relations if len(self.tasks_of(r)) >= 2]

    def last_task(self, relation: str) -> Task | None:
        tasks = self.tasks_of(relation)
        return tasks[-1] if tasks else None

    def edges(self) -> list[tuple[str, str]]:
        return [(task.name, r) for task in self.tasks for r in task.relations]
