"""Registry of candidate SQLite databases and their schema text.

A :class:`Catalog` introspects each registered database once (tables,
columns, declared types, primary and foreign keys) and keeps the result
immutable afterwards.  :func:`serialize_schema` turns an entry into the
canonical text consumed by embedders and prompts::

    Database concert_singer
    Table singer(singer_id:integer, name:text, country:text)
    Table concert(concert_id:integer, singer_id:integer)
    Foreign keys: concert.singer_id = singer.singer_id
"""

from __future__ import annotations

import json
import logging
import os
import sqlite3
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import CorruptManifest, DuplicateId, UnknownDatabase, UnreadableDatabase

log = logging.getLogger(__name__)

COLUMN_TYPES = ("text", "integer", "real", "blob", "unknown")


@dataclass(frozen=True)
class Column:
    name: str
    declared_type: str = "unknown"


@dataclass(frozen=True)
class ForeignKey:
    local_column: str
    ref_table: str
    ref_column: str


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...] = ()
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self):
        seen = set()
        for col in self.columns:
            if col.name.lower() in seen:
                raise ValueError(f"duplicate column {col.name!r} in table {self.name!r}")
            seen.add(col.name.lower())
        for pk in self.primary_key:
            if pk.lower() not in seen:
                raise ValueError(f"primary key {pk!r} is not a column of {self.name!r}")

    def column(self, name: str) -> Column | None:
        """Case-insensitive column lookup."""
        lname = name.lower()
        for col in self.columns:
            if col.name.lower() == lname:
                return col
        return None


@dataclass(frozen=True)
class DatabaseEntry:
    id: str
    name: str
    location: str
    tables: tuple[TableSchema, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("database id must be non-empty")
        for table in self.tables:
            for fk in table.foreign_keys:
                ref = self.table(fk.ref_table)
                if table.column(fk.local_column) is None or ref is None or ref.column(fk.ref_column) is None:
                    raise ValueError(
                        f"foreign key {table.name}.{fk.local_column} -> "
                        f"{fk.ref_table}.{fk.ref_column} does not resolve"
                    )

    def table(self, name: str) -> TableSchema | None:
        lname = name.lower()
        for table in self.tables:
            if table.name.lower() == lname:
                return table
        return None


@dataclass(frozen=True)
class SchemaText:
    db_id: str
    text: str

    @property
    def body(self) -> str:
        """Everything after the ``Database <name>`` header line."""
        _, _, rest = self.text.partition("\n")
        return rest


def normalize_type(declared: str | None) -> str:
    """Map a free-form SQLite declared type to one of :data:`COLUMN_TYPES`.

    Follows SQLite's own affinity rules, in the same precedence order.
    """
    t = (declared or "").upper()
    if not t:
        return "unknown"
    if "INT" in t:
        return "integer"
    if "CHAR" in t or "CLOB" in t or "TEXT" in t:
        return "text"
    if "BLOB" in t:
        return "blob"
    if "REAL" in t or "FLOA" in t or "DOUB" in t or "NUMERIC" in t or "DECIMAL" in t:
        return "real"
    return "unknown"


def connect_readonly(location: str | os.PathLike) -> sqlite3.Connection:
    path = Path(location)
    if not path.is_file():
        raise UnreadableDatabase(f"no such database file: {path}")
    uri = path.resolve().as_uri() + "?mode=ro"
    try:
        conn = sqlite3.connect(uri, uri=True, check_same_thread=False)
        conn.execute("PRAGMA query_only = ON")
    except sqlite3.Error as exc:
        raise UnreadableDatabase(f"{path}: {exc}") from exc
    return conn


def _quote(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def introspect(location: str | os.PathLike) -> tuple[TableSchema, ...]:
    """Read the user tables of a SQLite file, in creation order."""
    conn = connect_readonly(location)
    try:
        try:
            names = [
                row[0]
                for row in conn.execute(
                    "SELECT name FROM sqlite_master WHERE type = 'table' "
                    "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY rowid"
                )
            ]
            raw = {}
            for name in names:
                info = conn.execute(f"PRAGMA table_info({_quote(name)})").fetchall()
                fks = conn.execute(f"PRAGMA foreign_key_list({_quote(name)})").fetchall()
                raw[name] = (info, fks)
        except sqlite3.DatabaseError as exc:
            raise UnreadableDatabase(f"{location}: {exc}") from exc
    finally:
        conn.close()

    by_lower = {name.lower(): name for name in names}
    columns_of = {
        name: {row[1].lower(): row[1] for row in info} for name, (info, _) in raw.items()
    }
    pk_of = {
        name: [row[1] for row in sorted((r for r in info if r[5]), key=lambda r: r[5])]
        for name, (info, _) in raw.items()
    }

    tables = []
    for name in names:
        info, fk_rows = raw[name]
        columns = tuple(Column(row[1], normalize_type(row[2])) for row in info)
        fks = []
        for row in sorted(fk_rows, key=lambda r: (r[0], r[1])):
            _, _, ref_table, local, ref_col = row[:5]
            ref_name = by_lower.get(str(ref_table).lower())
            if ref_name is not None and ref_col is None:
                # REFERENCES t without a column list targets t's primary key
                pks = pk_of[ref_name]
                ref_col = pks[0] if len(pks) == 1 else None
            local_name = columns_of[name].get(str(local).lower())
            ref_col_name = columns_of[ref_name].get(str(ref_col).lower()) if ref_name else None
            if local_name is None or ref_col_name is None:
                log.warning("dropping dangling foreign key %s.%s -> %s.%s", name, local, ref_table, ref_col)
                continue
            fks.append(ForeignKey(local_name, ref_name, ref_col_name))
        tables.append(TableSchema(name, columns, tuple(pk_of[name]), tuple(fks)))
    return tuple(tables)


def serialize_schema(entry: DatabaseEntry) -> SchemaText:
    lines = [f"Database {entry.name}"]
    fk_parts = []
    for table in entry.tables:
        cols = ", ".join(f"{c.name}:{c.declared_type}" for c in table.columns)
        lines.append(f"Table {table.name}({cols})")
        for fk in table.foreign_keys:
            fk_parts.append(f"{table.name}.{fk.local_column} = {fk.ref_table}.{fk.ref_column}")
    if fk_parts:
        lines.append("Foreign keys: " + "; ".join(fk_parts))
    return SchemaText(entry.id, "\n".join(lines))


class Catalog:
    """Ordered collection of :class:`DatabaseEntry` keyed by id."""

    def __init__(self, entries: list[DatabaseEntry] | None = None):
        self._entries: dict[str, DatabaseEntry] = {}
        self._lock = threading.Lock()
        for entry in entries or []:
            self.add(entry)

    def add(self, entry: DatabaseEntry) -> DatabaseEntry:
        with self._lock:
            if entry.id in self._entries:
                raise DuplicateId(f"database id {entry.id!r} already registered")
            self._entries[entry.id] = entry
        return entry

    def register_database(self, location: str | os.PathLike, id: str, name: str | None = None) -> DatabaseEntry:
        if not id:
            raise ValueError("database id must be non-empty")
        if id in self._entries:
            raise DuplicateId(f"database id {id!r} already registered")
        tables = introspect(location)
        return self.add(DatabaseEntry(id, name or id, str(location), tables))

    def get(self, db_id: str) -> DatabaseEntry:
        try:
            return self._entries[db_id]
        except KeyError:
            raise UnknownDatabase(f"no database registered as {db_id!r}") from None

    def __contains__(self, db_id: object) -> bool:
        return db_id in self._entries

    def __iter__(self) -> Iterator[DatabaseEntry]:
        return iter(list(self._entries.values()))

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def ids(self) -> list[str]:
        return list(self._entries)

    def schema_texts(self) -> list[SchemaText]:
        return [serialize_schema(e) for e in self]

    # manifest -----------------------------------------------------------

    def to_manifest(self) -> dict:
        return {"databases": [{"id": e.id, "name": e.name, "path": e.location} for e in self]}

    def save_manifest(self, path: str | os.PathLike) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_manifest(), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load_manifest(cls, path: str | os.PathLike) -> "Catalog":
        """Rebuild a catalog by re-introspecting every database in the manifest.

        Relative paths are resolved against the manifest's directory.  Either
        the whole manifest loads or an error is raised.
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            items = data["databases"]
            specs = [(str(d["id"]), str(d.get("name") or d["id"]), str(d["path"])) for d in items]
        except FileNotFoundError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptManifest(f"{path}: {exc}") from exc
        catalog = cls()
        for db_id, name, location in specs:
            loc = Path(location)
            if not loc.is_absolute():
                loc = path.parent / loc
                location = str(loc)
            catalog.add(DatabaseEntry(db_id, name, location, introspect(loc)))
        return catalog
