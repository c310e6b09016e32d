"""
Copies of shared atoms, their Lagrange multipliers and the step schedule.

A multiplier is stored as the weight of a singleton clause added to a task on
its copy of a shared atom. After each round the copies are pulled towards
their mean: ``ν ← ν − α (x − mean)``. Deviations from the mean sum to zero,
so the multipliers of an atom always sum to zero.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from core import constants
from core.types import MissingCopyError

logger = logging.getLogger(__name__)


@dataclass
class SharedVariableRegistry:
    """
    Attributes:
        participants: Tasks holding a copy of each shared atom, in schedule
            order.
        relation_of: Relation of each shared atom.
        copies: Latest reported copy per task and atom.
    """

    participants: dict[int, tuple[str, ...]] = field(default_factory=dict)
    relation_of: dict[int, str] = field(default_factory=dict)
    copies: dict[str, dict[int, float]] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        variables: Mapping[str, Iterable[int]],
        relation_of: Mapping[int, str],
        order: Sequence[str],
    ) -> SharedVariableRegistry:
        """Share every atom that two or more tasks hold as a variable."""
        holders: dict[int, list[str]] = defaultdict(list)
        for name in order:
            for atom in variables[name]:
                holders[atom].append(name)
        participants = {
            atom: tuple(names)
            for atom, names in sorted(holders.items())
            if len(names) > 1
        }
        return cls(participants, {a: relation_of[a] for a in participants})

    @property
    def atoms(self) -> list[int]:
        return list(self.participants)

    def atoms_of(self, task: str) -> list[int]:
        return [a for a, names in self.participants.items() if task in names]

    def relations(self) -> list[str]:
        return sorted(set(self.relation_of.values()))

    def tasks_of(self, relation: str) -> set[str]:
        return {
            name
            for atom, names in self.participants.items()
            if self.relation_of[atom] == relation
            for name in names
        }

    def record(self, task: str, values: Mapping[int, float]) -> None:
        self.copies[task] = {
            a: float(values[a]) for a in self.atoms_of(task) if a in values
        }

    def clear(self) -> None:
        self.copies.clear()

    def copy_values(self, atom: int) -> np.ndarray:
        """
        Raises:
            MissingCopyError: A participating task has not reported the atom.
        """
        try:
            return np.array([self.copies[t][atom] for t in self.participants[atom]])
        except KeyError:
            raise MissingCopyError(f"Atom {atom} is missing a copy") from None

    def mean(self, atom: int) -> float:
        return float(self.copy_values(atom).mean())

    def rmse(self) -> float:
        """Root-mean-square deviation of every copy from its atom's mean."""
        deviations = [
            values - values.mean() for values in map(self.copy_values, self.atoms)
        ]
        if not deviations:
            return 0.0
        return float(np.sqrt(np.mean(np.concatenate(deviations) ** 2)))

    def disagreement(self, tolerance: float = 0.0) -> float:
        """Fraction of shared atoms whose copies spread more than ``tolerance``."""
        if not self.participants:
            return 0.0
        spread = [np.ptp(self.copy_values(a)) for a in self.atoms]
        return sum(1 for s in spread if s > tolerance) / len(spread)


class MultiplierStore:
    """Multipliers per (task, shared atom) in one numpy vector."""

    def __init__(self, registry: SharedVariableRegistry) -> None:
        self._position: dict[tuple[str, int], int] = {}
        for atom, names in registry.participants.items():
            for name in names:
                self._position[(name, atom)] = len(self._position)
        self.values = np.zeros(len(self._position))

    def __getitem__(self, key: tuple[str, int]) -> float:
        return float(self.values[self._position[key]])

    def priors(self, task: str) -> dict[int, float]:
        return {
            atom: float(self.values[p])
            for (name, atom), p in self._position.items()
            if name == task
        }

    def offset(self, task: str) -> float:
        """Constant ``Σ max(ν, 0)`` the singleton clauses add to a task cost."""
        return sum(max(v, 0.0) for v in self.priors(task).values())

    def update(
        self, atom: int, names: Sequence[str], copies: np.ndarray, alpha: float
    ) -> None:
        mean = copies.mean()
        for name, value in zip(names, copies):
            self.values[self._position[(name, atom)]] -= alpha * (value - mean)

    def sum_residual(self, registry: SharedVariableRegistry) -> float:
        """Largest ``|Σ_j ν_j|`` over shared atoms."""
        worst = 0.0
        for atom, names in registry.participants.items():
            worst = max(worst, abs(sum(self[(n, atom)] for n in names)))
        return worst


def update_multipliers(
    registry: SharedVariableRegistry,
    store: MultiplierStore,
    alpha: float,
    relation: str | None = None,
) -> int:
    """
    Apply one subgradient step, to every shared atom or to one relation's.

    Returns:
        int: Number of atoms updated.

    Raises:
        MissingCopyError: A participating task has not reported a copy.
    """
    updated = 0
    for atom, names in registry.participants.items():
        if relation is not None and registry.relation_of[atom] != relation:
            continue
        store.update(atom, names, registry.copy_values(atom), alpha)
        updated += 1
    return updated


@dataclass(frozen=True)
class StepSchedule:
    initial: float = constants.STEP_INITIAL
    mode: str = constants.STEP_SCHEDULE_DECAY
    horizon: float = constants.STEP_DECAY_HORIZON

    def __post_init__(self) -> None:
        if self.initial <= 0 or not math.isfinite(self.initial):
            raise ValueError("step size must be positive")
        if self.mode not in constants.STEP_SCHEDULES:
            raise ValueError(f"Unknown step schedule: {self.mode}")

    def alpha(self, k: int) -> float:
        """Step of round ``k`` (from 0): ``α0`` or ``α0 / (1 + k / horizon)``."""
        if self.mode == constants.STEP_SCHEDULE_CONSTANT:
            return self.initial
        return self.initial / (1.0 + k / self.horizon)
