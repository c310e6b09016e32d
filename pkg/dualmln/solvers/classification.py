"""
Classification: independent per-object decisions.

Each object (a key value of the owned relation) picks one label: one of its
candidate classes or none (``⊥``). A Boolean relation has a single candidate
per object, so the choice is include or exclude. The penalty ``W`` of a
label is the total cost of the object's clauses under that choice.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from core.types import InfeasibleTaskError, UnsupportedStructureError
from logic.types import GroundDatabase

from .base import ConditionalSolver, ReducedClause, TaskInput, penalty_table

logger = logging.getLogger(__name__)

Label = int | None


@dataclass(frozen=True)
class Slot:
    """One object: its key values and its candidate class atoms."""

    name: str
    atoms: tuple[int, ...]
    boolean: bool

    def labels(self) -> list[Label]:
        """Boolean slots prefer inclusion on ties; multi-class slots prefer ⊥."""
        if self.boolean:
            return [self.atoms[0], None]
        return [None, *self.atoms]

    def assignment(self, label: Label) -> dict[int, bool]:
        return {atom: atom == label for atom in self.atoms}


@dataclass
class ClassificationInput:
    slots: list[Slot]
    penalties: list[np.ndarray]

    @classmethod
    def from_features(
        cls,
        model: Mapping[str, float],
        instance: Mapping[int, Iterable[str]],
    ) -> ClassificationInput:
        """
        Boolean instance from a feature model ``M(f, w)`` and pairs ``I(o, f)``.

        A feature of weight ``w > 0`` costs ``w`` when the object is left out;
        ``w < 0`` costs ``|w|`` when it is included (``-inf`` forbids it).
        """
        slots, penalties = [], []
        for atom, features in sorted(instance.items()):
            weights = [model[f] for f in dict.fromkeys(features)]
            include = sum(-w for w in weights if w < 0)
            exclude = sum(w for w in weights if w > 0)
            slots.append(Slot(str(atom), (atom,), True))
            penalties.append(np.array([include, exclude], dtype=float))
        return cls(slots, penalties)


def build_classification(
    db: GroundDatabase,
    reduced: Sequence[ReducedClause],
    owned: Sequence[int],
    key: Sequence[int],
) -> ClassificationInput:
    """
    Group owned atoms by key and compute label penalties.

    Raises:
        UnsupportedStructureError: A clause couples two objects.
    """
    groups: dict[tuple[str, ...], list[int]] = defaultdict(list)
    for atom in owned:
        args = db.atoms[atom].args
        groups[tuple(args[i] for i in key)].append(atom)
    slot_of: dict[int, tuple[str, ...]] = {}
    slots: dict[tuple[str, ...], Slot] = {}
    for values, atoms in sorted(groups.items()):
        atoms.sort(key=lambda a: db.atoms[a].args)
        boolean = len(key) == len(db.atoms[atoms[0]].args)
        predicate = db.atoms[atoms[0]].predicate
        slots[values] = Slot(f"{predicate}[{', '.join(values)}]", tuple(atoms), boolean)
        slot_of.update((a, values) for a in atoms)
    by_slot: dict[tuple[str, ...], list[ReducedClause]] = defaultdict(list)
    for clause in reduced:
        touched = {slot_of[a] for a in clause.atoms()}
        if len(touched) != 1:
            raise UnsupportedStructureError(
                f"Rule {clause.rule} couples {len(touched)} objects"
            )
        by_slot[touched.pop()].append(clause)
    ordered = [slots[v] for v in slots]
    tables = [
        penalty_table(by_slot[v], [s.assignment(lab) for lab in s.labels()])
        for v, s in slots.items()
    ]
    return ClassificationInput(ordered, tables)


def solve_classification_map(ci: ClassificationInput) -> tuple[dict[int, float], float]:
    """
    Pick ``argmin W`` per object; the first label wins ties.

    Raises:
        InfeasibleTaskError: Every label of an object violates a hard clause.
    """
    values: dict[int, float] = {}
    total = 0.0
    for slot, table in zip(ci.slots, ci.penalties):
        if np.isinf(table).all():
            raise InfeasibleTaskError(f"Conflicting hard features on {slot.name}")
        choice = int(np.argmin(table))
        total += float(table[choice])
        label = slot.labels()[choice]
        values.update({a: 1.0 if a == label else 0.0 for a in slot.atoms})
    return values, total


def label_marginals(table: np.ndarray) -> np.ndarray:
    """``exp(-W) / sum exp(-W)`` computed in log space."""
    scores = -np.asarray(table, dtype=float)
    return np.exp(scores - logsumexp(scores))


def solve_classification_marginal(ci: ClassificationInput) -> dict[int, float]:
    """
    Exact per-atom marginals: softmax over each object's labels.

    Raises:
        InfeasibleTaskError: Every label of an object violates a hard clause.
    """
    values: dict[int, float] = {}
    for slot, table in zip(ci.slots, ci.penalties):
        if np.isinf(table).all():
            raise InfeasibleTaskError(f"Conflicting hard features on {slot.name}")
        probs = label_marginals(table)
        for label, p in zip(slot.labels(), probs):
            if label is not None:
                values[label] = float(p)
    return values


class ClassificationSolver(ConditionalSolver):
    name = "classification"

    def _input(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> ClassificationInput:
        return build_classification(inp.db, reduced, owned, inp.task.key)

    def solve_owned_map(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]:
        values, cost = solve_classification_map(self._input(inp, reduced, owned))
        logger.debug("%s: %d object(s), cost %s", inp.task.name, len(owned), cost)
        return values

    def solve_owned_marginal(
        self, inp: TaskInput, reduced: list[ReducedClause], owned: list[int]
    ) -> dict[int, float]:
        return solve_classification_marginal(self._input(inp, reduced, owned))
