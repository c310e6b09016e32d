"""
In-memory relations with set semantics and lazily built hash indexes.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

from core.types import PlanError

logger = logging.getLogger(__name__)

Row = tuple[str, ...]


@dataclass(frozen=True)
class RelationStats:
    count: int
    distinct: tuple[int, ...]

    def distinct_of(self, column: int) -> int:
        return max(self.distinct[column], 1)


class Relation:
    """
    A named set of fixed-arity tuples.

    Indexes are keyed by the tuple of bound columns and built on the first
    probe that needs them; any mutation drops indexes and statistics.
    """

    def __init__(self, name: str, arity: int, rows: Iterable[Row] = ()) -> None:
        if arity < 0:
            raise PlanError(f"Relation {name} has negative arity")
        self.name = name
        self.arity = arity
        self._rows: set[Row] = set()
        self._indexes: dict[tuple[int, ...], dict[Row, list[Row]]] = {}
        self._stats: RelationStats | None = None
        self.extend(rows)

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[Row]:
        return iter(self.sorted_rows())

    def __contains__(self, row: object) -> bool:
        return row in self._rows

    def __repr__(self) -> str:
        return f"Relation({self.name!r}, arity={self.arity}, rows={len(self)})"

    def add(self, row: Iterable[str]) -> None:
        row = tuple(row)
        if len(row) != self.arity:
            raise PlanError(
                f"{self.name} expects {self.arity} column(s), got {len(row)}"
            )
        if row not in self._rows:
            self._rows.add(row)
            self._invalidate()

    def extend(self, rows: Iterable[Iterable[str]]) -> None:
        for row in rows:
            self.add(row)

    def _invalidate(self) -> None:
        self._indexes.clear()
        self._stats = None

    def sorted_rows(self) -> list[Row]:
        return sorted(self._rows)

    def rows(self) -> frozenset[Row]:
        return frozenset(self._rows)

    @property
    def stats(self) -> RelationStats:
        if self._stats is None:
            distinct = tuple(
                len({row[column] for row in self._rows}) for column in range(self.arity)
            )
            self._stats = RelationStats(len(self._rows), distinct)
        return self._stats

    def lookup(self, columns: tuple[int, ...], values: Row) -> list[Row]:
        """Return the rows whose ``columns`` equal ``values``."""
        if not columns:
            return list(self._rows)
        index = self._indexes.get(columns)
        if index is None:
            built: dict[Row, list[Row]] = defaultdict(list)
            for row in self._rows:
                built[tuple(row[c] for c in columns)].append(row)
            index = self._indexes[columns] = dict(built)
            logger.debug("Built index %s on %s", columns, self.name)
        return index.get(values, [])

    def dump_tsv(self, path: str | Path) -> None:
        """Write one tuple per line, tab separated, in sorted order."""
        with Path(path).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
            writer.writerows(self.sorted_rows())

    @classmethod
    def load_tsv(cls, name: str, arity: int, path: str | Path) -> Relation:
        with Path(path).open(encoding="utf-8", newline="") as handle:
            rows = [tuple(row) for row in csv.reader(handle, delimiter="\t") if row]
        return cls(name, arity, rows)


class Catalog:
    """Name → relation mapping used by view evaluation."""

    def __init__(self, relations: Iterable[Relation] = ()) -> None:
        self._relations: dict[str, Relation] = {}
        for relation in relations:
            self.register(relation)

    def register(self, relation: Relation) -> Relation:
        self._relations[relation.name] = relation
        return relation

    def __getitem__(self, name: str) -> Relation:
        try:
            return self._relations[name]
        except KeyError:
            raise PlanError(f"Unknown relation: {name}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._relations

    def names(self) -> list[str]:
        return sorted(self._relations)

    def stats(self) -> dict[str, RelationStats]:
        return {name: rel.stats for name, rel in self._relations.items()}
