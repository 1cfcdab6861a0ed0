"""Relational core: interned data values, facts, schemas, and databases.

Databases are immutable once built: relations are deduplicated fact sets
under set semantics, and every column carries a hash index so the join
engines can probe by bound value instead of scanning.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .errors import LoadError

_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")

_SENTINEL = object()


class DataValue:
    """A constant appearing in some database column.

    The payload is either an exact decimal (stored as a Fraction) or a
    text symbol.  Parsing tries the numeric reading first, so "1.0" and
    "1" intern to the same value while "x1" stays text.  Construction
    goes through :func:`intern`; equal payloads share one object.
    """

    __slots__ = ("payload", "sort_key")

    _pool: dict = {}

    def __init__(self, payload, _guard=None):
        if _guard is not _SENTINEL:
            raise TypeError("DataValue instances are created via intern()")
        self.payload = payload
        # Numbers order before text; ordering never compares across kinds.
        kind = 0 if isinstance(payload, Fraction) else 1
        self.sort_key = (kind, payload)

    @property
    def is_number(self) -> bool:
        return isinstance(self.payload, Fraction)

    def text(self) -> str:
        """Canonical display form (used by the CLI and reprs)."""
        if isinstance(self.payload, Fraction):
            return fraction_text(self.payload)
        return self.payload

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, DataValue):
            return NotImplemented
        return self.payload == other.payload

    def __hash__(self):
        return hash(self.payload)

    def __lt__(self, other):
        if not isinstance(other, DataValue):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __le__(self, other):
        if not isinstance(other, DataValue):
            return NotImplemented
        return self.sort_key <= other.sort_key

    def __repr__(self):
        return f"DataValue({self.text()!r})"


def fraction_text(q: Fraction) -> str:
    """Render a Fraction compactly: integers bare, otherwise num/den."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def intern(text: str) -> DataValue:
    """Return the canonical DataValue for a raw cell.

    Total over all inputs: numeric-looking payloads become exact
    decimals, everything else is kept as text.
    """
    if isinstance(text, DataValue):
        return text
    raw = str(text)
    if _NUMBER_RE.match(raw):
        try:
            payload = Fraction(Decimal(raw))
        except InvalidOperation:  # pragma: no cover - regex forbids this
            payload = raw
    else:
        payload = raw
    value = DataValue._pool.get(payload)
    if value is None:
        value = DataValue(payload, _guard=_SENTINEL)
        DataValue._pool[payload] = value
    return value


def intern_number(number) -> DataValue:
    """Intern an int/Fraction directly (used by generators and tests)."""
    payload = Fraction(number)
    value = DataValue._pool.get(payload)
    if value is None:
        value = DataValue(payload, _guard=_SENTINEL)
        DataValue._pool[payload] = value
    return value


class Fact:
    """A ground tuple R(a1, ..., an); relation name plus interned values."""

    __slots__ = ("relation", "values", "_key", "_hash")

    def __init__(self, relation: str, values: Iterable[DataValue]):
        vals = tuple(values)
        self.relation = relation
        self.values = vals
        self._key = (relation, tuple(v.sort_key for v in vals))
        self._hash = hash((relation, vals))

    @property
    def arity(self) -> int:
        return len(self.values)

    @property
    def sort_key(self):
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Fact):
            return NotImplemented
        return self.relation == other.relation and self.values == other.values

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        if not isinstance(other, Fact):
            return NotImplemented
        return self._key < other._key

    def __le__(self, other):
        if not isinstance(other, Fact):
            return NotImplemented
        return self._key <= other._key

    def __repr__(self):
        inner = ",".join(v.text() for v in self.values)
        return f"{self.relation}({inner})"


_SCHEMA_LINE_RE = re.compile(r"([A-Za-z_]\w*)\s*/\s*(\d+)\Z")


@dataclass(frozen=True)
class Schema:
    """Relation name -> arity map."""

    arities: Mapping[str, int]

    def __post_init__(self):
        for name, arity in self.arities.items():
            if arity < 1:
                raise LoadError(f"relation {name}: arity must be positive, got {arity}")

    def arity(self, relation: str) -> int:
        try:
            return self.arities[relation]
        except KeyError:
            raise LoadError(f"unknown relation {relation!r}") from None

    def __contains__(self, relation: str) -> bool:
        return relation in self.arities

    @classmethod
    def parse(cls, text: str, source: str = "<schema>") -> "Schema":
        arities: dict[str, int] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            m = _SCHEMA_LINE_RE.match(line)
            if m is None:
                raise LoadError(f"{source}, line {lineno}: expected 'Name/arity', got {line!r}")
            name, arity = m.group(1), int(m.group(2))
            if name in arities:
                raise LoadError(f"{source}, line {lineno}: duplicate declaration of {name}")
            if arity < 1:
                raise LoadError(f"{source}, line {lineno}: arity must be positive")
            arities[name] = arity
        if not arities:
            raise LoadError(f"{source}: no relation declarations found")
        return cls(arities)

    @classmethod
    def load(cls, path: Path) -> "Schema":
        path = Path(path)
        if not path.is_file():
            raise LoadError(f"missing schema file {path}")
        return cls.parse(path.read_text(encoding="utf-8"), source=str(path))


class Database:
    """Immutable collection of relations with per-column value indexes."""

    __slots__ = ("schema", "_relations", "_sets", "_index", "load_report")

    def __init__(self, schema: Schema, relations: Mapping[str, Iterable[Fact]],
                 load_report: Mapping[str, dict] | None = None):
        self.schema = schema
        rels: dict[str, tuple[Fact, ...]] = {}
        sets: dict[str, frozenset] = {}
        index: dict[str, tuple[dict, ...]] = {}
        for name in schema.arities:
            facts = sorted(set(relations.get(name, ())))
            arity = schema.arity(name)
            for f in facts:
                if f.relation != name:
                    raise LoadError(f"fact {f!r} filed under relation {name}")
                if f.arity != arity:
                    raise LoadError(f"fact {f!r}: expected arity {arity}, got {f.arity}")
            rels[name] = tuple(facts)
            sets[name] = frozenset(facts)
            cols = []
            for c in range(arity):
                col: dict = {}
                for f in facts:
                    col.setdefault(f.values[c], []).append(f)
                cols.append({v: tuple(fs) for v, fs in col.items()})
            index[name] = tuple(cols)
        self._relations = rels
        self._sets = sets
        self._index = index
        self.load_report = dict(load_report or {})

    def relation(self, name: str) -> tuple[Fact, ...]:
        """All facts of a relation in sorted order."""
        try:
            return self._relations[name]
        except KeyError:
            raise LoadError(f"unknown relation {name!r}") from None

    def facts(self, name: str) -> frozenset:
        return self._sets[name]

    def size(self, name: str) -> int:
        return len(self.relation(name))

    def lookup(self, name: str, column: int, value: DataValue) -> tuple[Fact, ...]:
        """Facts of `name` whose `column` holds `value` (hash probe)."""
        return self._index[name][column].get(value, ())

    def __contains__(self, fact: Fact) -> bool:
        rel = self._sets.get(fact.relation)
        return rel is not None and fact in rel

    def all_facts(self) -> list[Fact]:
        out: list[Fact] = []
        for name in sorted(self._relations):
            out.extend(self._relations[name])
        return out

    @classmethod
    def from_facts(cls, schema: Schema, facts: Iterable[Fact]) -> "Database":
        grouped: dict[str, list[Fact]] = {}
        for f in facts:
            grouped.setdefault(f.relation, []).append(f)
        unknown = set(grouped) - set(schema.arities)
        if unknown:
            raise LoadError(f"facts reference undeclared relations: {sorted(unknown)}")
        return cls(schema, grouped)


def load_database(directory, schema: Schema | None = None) -> Database:
    """Load `<Relation>.csv` files (no header) under `directory`.

    When no schema is passed, `schema.txt` in the directory is read.
    Rows are deduplicated.  Whitespace around unquoted cells is stripped.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise LoadError(f"database directory {directory} does not exist")
    if schema is None:
        schema = Schema.load(directory / "schema.txt")
    relations: dict[str, list[Fact]] = {}
    report: dict[str, dict] = {}
    for name in sorted(schema.arities):
        arity = schema.arity(name)
        path = directory / f"{name}.csv"
        if not path.is_file():
            raise LoadError(f"missing relation file {path}")
        facts: list[Fact] = []
        rows_read = 0
        try:
            with path.open(newline="", encoding="utf-8") as handle:
                for lineno, row in enumerate(csv.reader(handle), start=1):
                    if not row or all(cell.strip() == "" for cell in row):
                        continue
                    if len(row) != arity:
                        raise LoadError(
                            f"{path}, line {lineno}: expected {arity} values, got {len(row)}")
                    rows_read += 1
                    facts.append(Fact(name, (intern(cell.strip()) for cell in row)))
        except csv.Error as exc:
            raise LoadError(f"{path}: malformed CSV ({exc})") from exc
        relations[name] = facts
        report[name] = {"rows_read": rows_read, "rows_kept": len(set(facts)), "arity": arity}
    return Database(schema, relations, load_report=report)
