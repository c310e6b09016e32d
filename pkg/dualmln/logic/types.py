"""
First-order and ground representations of a Markov logic program.

Rules are kept in clause (disjunctive) form. Equality constraints are stored
as disjuncts too, so ``p(x,y), p(x,z) => y = z`` becomes
``!p(x,y) v !p(x,z) v y = z``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Final, TypeAlias

import numpy as np
import numpy.typing as npt

from core.types import SchemaError

HARD: Final[float] = math.inf

World: TypeAlias = npt.NDArray[np.bool_]
AtomKey: TypeAlias = tuple[str, tuple[str, ...]]
GroundLiteral: TypeAlias = tuple[int, bool]


def is_hard(weight: float) -> bool:
    """Return True for the distinguished HARD weight."""
    return weight == HARD


def format_weight(weight: float) -> str:
    """Render a weight the way the program grammar reads it back."""
    if is_hard(weight):
        return "inf"
    if float(weight).is_integer():
        return str(int(weight))
    return repr(float(weight))


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Constant:
    value: str

    def __str__(self) -> str:
        return self.value


Term: TypeAlias = Variable | Constant


@dataclass(frozen=True, slots=True)
class PredicateSchema:
    """Declared relation: name, argument domains and evidence/query kind."""

    name: str
    domains: tuple[str, ...]
    query: bool = False

    def __post_init__(self) -> None:
        if not self.domains:
            raise SchemaError(f"Predicate {self.name} must have arity >= 1")

    @property
    def arity(self) -> int:
        return len(self.domains)


@dataclass(frozen=True, slots=True)
class Literal:
    positive: bool
    predicate: str
    args: tuple[Term, ...]

    def variables(self) -> Iterator[Variable]:
        return (arg for arg in self.args if isinstance(arg, Variable))

    def negate(self) -> Literal:
        return Literal(not self.positive, self.predicate, self.args)


@dataclass(frozen=True, slots=True)
class Equality:
    """Equality disjunct: satisfied when ``left = right`` (or ``!=`` if negative)."""

    positive: bool
    left: Term
    right: Term

    def variables(self) -> Iterator[Variable]:
        return (t for t in (self.left, self.right) if isinstance(t, Variable))

    def negate(self) -> Equality:
        return Equality(not self.positive, self.left, self.right)


@dataclass(frozen=True)
class Clause:
    """
    Weighted first-order clause.

    Attributes:
        weight: Finite real or HARD. Negative finite weights are allowed.
        literals: Predicate disjuncts.
        equalities: Equality disjuncts.
        index: Position of the clause in the program's rule list.
        task: Name of the user task the clause is pinned to, if any.
    """

    weight: float
    literals: tuple[Literal, ...]
    equalities: tuple[Equality, ...] = ()
    index: int = -1
    task: str | None = None

    def __post_init__(self) -> None:
        if math.isnan(self.weight) or self.weight == -math.inf:
            raise ValueError("weight must be a finite real or HARD")
        if not self.literals:
            raise ValueError("a rule needs at least one predicate literal")
        bound = {v for lit in self.literals for v in lit.variables()}
        for eq in self.equalities:
            loose = [v.name for v in eq.variables() if v not in bound]
            if loose:
                raise ValueError(
                    f"variable(s) {', '.join(loose)} appear only in a constraint"
                )

    @property
    def hard(self) -> bool:
        return is_hard(self.weight)

    def variables(self) -> list[Variable]:
        """Variables in order of first appearance."""
        seen: dict[Variable, None] = {}
        for lit in self.literals:
            for var in lit.variables():
                seen.setdefault(var, None)
        return list(seen)

    def predicates(self) -> set[str]:
        return {lit.predicate for lit in self.literals}

    def occurrences(self, predicate: str) -> list[Literal]:
        return [lit for lit in self.literals if lit.predicate == predicate]


@dataclass(frozen=True, slots=True)
class GroundAtom:
    id: int
    predicate: str
    args: tuple[str, ...]

    @property
    def key(self) -> AtomKey:
        return (self.predicate, self.args)

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(self.args)})"


@dataclass(frozen=True, slots=True)
class GroundClause:
    weight: float
    literals: tuple[GroundLiteral, ...]
    rule: int = -1

    @property
    def hard(self) -> bool:
        return is_hard(self.weight)

    def atoms(self) -> tuple[int, ...]:
        return tuple(atom for atom, _ in self.literals)


def make_ground_clause(
    weight: float, literals: Iterable[GroundLiteral], rule: int = -1
) -> GroundClause | None:
    """
    Simplify and build a ground clause.

    Duplicate literals collapse; a clause containing both ``a`` and ``!a`` is a
    tautology and is dropped (returns None).
    """
    signs: dict[int, bool] = {}
    for atom, positive in literals:
        previous = signs.get(atom)
        if previous is None:
            signs[atom] = positive
        elif previous != positive:
            return None
    return GroundClause(weight, tuple(sorted(signs.items())), rule)


@dataclass(frozen=True)
class GroundDatabase:
    """
    Propositional optimization instance produced by grounding.

    Attributes:
        atoms: Query atoms, ids dense in ``0..N-1``.
        clauses: Weighted ground clauses over atom ids.
        evidence: True evidence tuples (everything else is false).
        offset: Constant cost of eliminated clauses that are violated in
            every world.
    """

    atoms: tuple[GroundAtom, ...] = ()
    clauses: tuple[GroundClause, ...] = ()
    evidence: frozenset[AtomKey] = frozenset()
    offset: float = 0.0
    _ids: dict[AtomKey, int] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        for position, atom in enumerate(self.atoms):
            if atom.id != position:
                raise ValueError("atom ids must be dense and ordered")
            self._ids[atom.key] = atom.id
        if len(self._ids) != len(self.atoms):
            raise ValueError("duplicate ground atom")
        size = len(self.atoms)
        for clause in self.clauses:
            for atom, _ in clause.literals:
                if not 0 <= atom < size:
                    raise ValueError(f"clause references unknown atom {atom}")

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def atom_id(self, predicate: str, args: Sequence[str]) -> int:
        return self._ids[(predicate, tuple(args))]

    def lookup(self, predicate: str, args: Sequence[str]) -> int | None:
        return self._ids.get((predicate, tuple(args)))

    def atoms_of(self, predicate: str) -> list[int]:
        return [atom.id for atom in self.atoms if atom.predicate == predicate]

    def evidence_value(self, predicate: str, args: Sequence[str]) -> bool:
        return (predicate, tuple(args)) in self.evidence

    def empty_world(self) -> World:
        return np.zeros(len(self.atoms), dtype=bool)

    def world_from(self, true_atoms: Iterable[AtomKey | str]) -> World:
        """Build a world from atom keys or their printed form ``p(A, B)``."""
        names = {str(atom): atom.id for atom in self.atoms}
        world = self.empty_world()
        for item in true_atoms:
            world[names[item] if isinstance(item, str) else self._ids[item]] = True
        return world
